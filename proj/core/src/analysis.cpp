// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "adept/error.hpp"
#include "adept/random.hpp"

namespace adept {

std::string_view category_name(ShiftCategory c) {
  switch (c) {
    case ShiftCategory::kUnshifted: return "unshifted";
    case ShiftCategory::kMarginal: return "marginal";
    case ShiftCategory::kShifted: return "shifted";
  }
  return "?";
}

ShiftCategory categorize(std::size_t base_rank) {
  if (base_rank == 0) throw InvariantError("ranks start at 1");
  if (base_rank == 1) return ShiftCategory::kUnshifted;
  return base_rank <= 3 ? ShiftCategory::kMarginal : ShiftCategory::kShifted;
}

std::size_t token_rank(std::span<const double> logits, int token) {
  if (token < 0 || static_cast<std::size_t>(token) >= logits.size()) {
    throw ConfigError("token " + std::to_string(token) + " outside vocabulary of " + std::to_string(logits.size()));
  }
  const double v = logits[static_cast<std::size_t>(token)];
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (logits[j] > v || (logits[j] == v && j < static_cast<std::size_t>(token))) ++ahead;
  }
  return ahead + 1;
}

int greedy_token(std::span<const double> logits) {
  if (logits.empty()) throw ConfigError("greedy token over empty logits");
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

void TokenShiftAccumulator::add(const Tensor& base_logits, const Tensor& tuned_logits, std::size_t doc) {
  if (base_logits.rank() != 2 || base_logits.shape() != tuned_logits.shape()) {
    throw ConfigError("token shift needs matching [T, V] logits, got " + to_string(base_logits.shape()) + " and " +
                      to_string(tuned_logits.shape()));
  }
  const std::size_t T = base_logits.dim(0), V = base_logits.dim(1);
  for (std::size_t t = 0; t < T; ++t) {
    const auto base_row = base_logits.data().subspan(t * V, V);
    const auto tuned_row = tuned_logits.data().subspan(t * V, V);
    TokenShiftRecord r;
    r.doc = doc;
    r.position = t;
    r.aligned_token = greedy_token(tuned_row);
    r.base_rank = token_rank(base_row, r.aligned_token);
    r.aligned_rank = token_rank(tuned_row, r.aligned_token);
    r.category = categorize(r.base_rank);
    r.rank_improvement_ratio = static_cast<double>(r.base_rank) / static_cast<double>(r.aligned_rank);
    ++counts_[static_cast<std::size_t>(r.category)];
    if (r.category == ShiftCategory::kShifted) shifted_.push_back(r);
  }
}

TokenShiftReport TokenShiftAccumulator::report() const {
  TokenShiftReport r;
  r.counts = counts_;
  r.total = counts_[0] + counts_[1] + counts_[2];
  if (r.total > 0) {
    r.fractions[0] = static_cast<double>(counts_[0]) / static_cast<double>(r.total);
    r.fractions[1] = static_cast<double>(counts_[1]) / static_cast<double>(r.total);
    r.fractions[2] = static_cast<double>(counts_[2]) / static_cast<double>(r.total);
  }
  r.top_shifted = shifted_;
  std::stable_sort(r.top_shifted.begin(), r.top_shifted.end(), [](const auto& a, const auto& b) {
    return a.rank_improvement_ratio > b.rank_improvement_ratio;
  });
  if (r.top_shifted.size() > top_n_) r.top_shifted.resize(top_n_);
  return r;
}

TokenShiftReport token_shift_analysis(const Model& base, const Model& tuned, const Corpus& corpus, std::size_t top_n) {
  if (base.config.vocab_size != tuned.config.vocab_size) {
    throw ConfigError("vocab mismatch: base " + std::to_string(base.config.vocab_size) + ", tuned " +
                      std::to_string(tuned.config.vocab_size));
  }
  if (corpus.empty()) throw ConfigError("token shift analysis over an empty corpus");
  TokenShiftAccumulator acc(top_n);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& tokens = corpus.documents[i].tokens;
    acc.add(forward_logits(base, tokens), forward_logits(tuned, tokens), i);
  }
  return acc.report();
}

nlohmann::json to_json(const TokenShiftReport& r) {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& s : r.top_shifted) {
    top.push_back({{"doc", s.doc},
                   {"position", s.position},
                   {"aligned_token", s.aligned_token},
                   {"base_rank", s.base_rank},
                   {"aligned_rank", s.aligned_rank},
                   {"rank_improvement_ratio", s.rank_improvement_ratio}});
  }
  nlohmann::json j = {{"kind", "token_shift"}, {"total", r.total}, {"top_shifted", top}};
  for (auto c : {ShiftCategory::kUnshifted, ShiftCategory::kMarginal, ShiftCategory::kShifted}) {
    j["counts"][std::string(category_name(c))] = r.counts[static_cast<std::size_t>(c)];
    j["fractions"][std::string(category_name(c))] = r.fraction(c);
  }
  return j;
}

Model merge_expanded(std::span<const Model> models, const MergeSpec& spec) {
  if (models.empty()) throw ConfigError("merge needs at least one model");
  if (spec.weights.size() != models.size()) {
    throw ConfigError("merge got " + std::to_string(spec.weights.size()) + " weights for " +
                      std::to_string(models.size()) + " models");
  }
  for (double w : spec.weights) {
    if (!std::isfinite(w)) throw ConfigError("merge weights must be finite");
  }
  const Model& first = models[0];
  if (first.n_expanded() == 0) throw InvariantError("merge expects expanded models");
  for (std::size_t m = 1; m < models.size(); ++m) {
    const Model& other = models[m];
    if (!(other.config == first.config) || other.layers.size() != first.layers.size()) {
      throw InvariantError("model " + std::to_string(m) + " has a different configuration");
    }
    for (std::size_t l = 0; l < first.layers.size(); ++l) {
      if (other.layers[l].origin() != first.layers[l].origin() || other.layers[l].source() != first.layers[l].source()) {
        throw InvariantError("model " + std::to_string(m) + " was expanded with a different plan (layer " +
                             std::to_string(l) + ")");
      }
      if (first.layers[l].is_expanded()) continue;
      for (Unit u : kAllUnits) {
        if (!std::ranges::equal(other.layers[l].unit(u).data(), first.layers[l].unit(u).data())) {
          throw InvariantError("model " + std::to_string(m) + " diverges from the base at original layer " +
                               std::to_string(l) + " " + std::string(unit_name(u)));
        }
      }
    }
    if (!(other.token_embedding == first.token_embedding) || !(other.final_norm == first.final_norm) ||
        !(other.lm_head == first.lm_head)) {
      throw InvariantError("model " + std::to_string(m) + " diverges from the base in shared parameters");
    }
  }

  Model out = first;
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    if (!out.layers[l].is_expanded()) continue;
    for (Unit u : kAllUnits) {
      auto dst = out.layers[l].unit(u).data();
      for (std::size_t i = 0; i < dst.size(); ++i) {
        double acc = spec.weights[0] * models[0].layers[l].unit(u)[i];
        for (std::size_t m = 1; m < models.size(); ++m) acc += spec.weights[m] * models[m].layers[l].unit(u)[i];
        dst[i] = acc;
      }
    }
  }
  if (!std::ranges::all_of(out.tensors(), [](const Tensor* t) { return t->all_finite(); })) {
    throw NumericError("merged parameters are not finite");
  }
  return out;
}

ActivationCapture activation_capture(const Model& model, const Corpus& corpus, std::size_t layer,
                                     std::size_t n_samples, std::uint64_t seed) {
  if (layer >= model.layers.size()) {
    throw ConfigError("layer " + std::to_string(layer) + " outside " + std::to_string(model.layers.size()) + " layers");
  }
  if (corpus.empty()) throw ConfigError("activation capture over an empty corpus");
  ActivationCapture cap;
  cap.layer = layer;
  std::vector<std::size_t> idx(corpus.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (n_samples >= corpus.size()) {
    cap.truncated = n_samples > corpus.size();
  } else {
    Rng rng(seed);
    for (std::size_t i = 0; i < n_samples; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    idx.resize(n_samples);
    std::sort(idx.begin(), idx.end());
  }
  for (auto i : idx) {
    Graph g;
    const auto trace = build_forward(g, model, corpus.documents[i].tokens);
    const auto h = g.value(trace.layer_outputs[layer]).data();
    double s = 0.0;
    for (double v : h) s += v;
    cap.samples.push_back({corpus.language_tag, i, s / static_cast<double>(h.size())});
  }
  return cap;
}

std::string activations_to_csv(std::span<const ActivationCapture> captures) {
  std::ostringstream out;
  out.precision(17);
  out << "corpus_tag,doc_index,value\n";
  for (const auto& cap : captures) {
    for (const auto& s : cap.samples) out << s.corpus_tag << ',' << s.doc_index << ',' << s.value << '\n';
  }
  return out.str();
}

double silverman_bandwidth(std::span<const double> samples) {
  const auto n = static_cast<double>(samples.size());
  if (samples.size() < 2) throw ConfigError("bandwidth needs at least 2 samples");
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return 1.06 * sd * std::pow(n, -0.2);
}

KdeCurve kde_1d(std::span<const double> samples, std::optional<double> bandwidth, std::size_t points) {
  if (samples.size() < 2) throw ConfigError("KDE needs at least 2 samples");
  if (points < 2) throw ConfigError("KDE needs at least 2 grid points");
  KdeCurve c;
  if (bandwidth) {
    if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth)) throw ConfigError("KDE bandwidth must be positive");
    c.bandwidth = *bandwidth;
  } else {
    c.bandwidth = silverman_bandwidth(samples);
    if (!(c.bandwidth > 0.0)) {
      throw ConfigError("samples have zero variance; pass an explicit bandwidth");
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it - 3.0 * c.bandwidth, hi = *hi_it + 3.0 * c.bandwidth;
  const double norm = 1.0 / (static_cast<double>(samples.size()) * c.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  c.grid.resize(points);
  c.density.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    double s = 0.0;
    for (double xi : samples) {
      const double z = (x - xi) / c.bandwidth;
      s += std::exp(-0.5 * z * z);
    }
    c.grid[i] = x;
    c.density[i] = s * norm;
  }
  return c;
}

nlohmann::json to_json(const KdeCurve& c) {
  return {{"kind", "kde"}, {"bandwidth", c.bandwidth}, {"grid", c.grid}, {"density", c.density}};
}

void OptimalLrProblem::validate() const {
  if (w.empty() || w.size() != importance.size()) throw ConfigError("problem needs equal-length, non-empty w and I");
  double W = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw ConfigError("unit sizes must be non-negative");
    W += x;
  }
  if (!(W > 0.0)) throw ConfigError("total unit size must be positive");
  if (!(b > 0.0)) throw ConfigError("b must be positive");
  if (!(a > 0.0)) throw ConfigError("a must be positive");
}

double lr_bound(const OptimalLrProblem& p, std::span<const double> eta) {
  if (eta.size() != p.w.size()) throw ConfigError("allocation length does not match the problem");
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    lin += p.w[i] * p.importance[i] * eta[i];
    quad += p.w[i] * eta[i] * eta[i];
  }
  return p.a * lin + p.b * quad;
}

OptimalLrSolution optimal_lr_closed_form(const OptimalLrProblem& p) {
  p.validate();
  double W = 0.0, wi = 0.0;
  for (std::size_t i = 0; i < p.w.size(); ++i) {
    W += p.w[i];
    wi += p.w[i] * p.importance[i];
  }
  const double mean_i = wi / W;
  OptimalLrSolution s;
  for (double I : p.importance) s.eta.push_back(p.eta_avg - p.a / (2.0 * p.b) * (I - mean_i));
  s.bound = lr_bound(p, s.eta);
  return s;
}

}  // namespace adept
