// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adept/error.hpp"
#include "adept/evaluation.hpp"

namespace adept {
namespace {

void require_probe(const Corpus& probe) {
  if (probe.empty()) throw ConfigError("importance probing needs a non-empty probe corpus");
}

void require_unmasked(const Model& model) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].masked()) throw InvariantError("layer " + std::to_string(l) + " is masked on entry to probing");
  }
}

std::vector<std::size_t> original_layers(const Model& model) {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (!model.layers[l].is_expanded()) out.push_back(l);
  }
  return out;
}

// Copy whose only gradient-carrying tensors are the units of `layers`.
Model grad_copy(const Model& model, std::span<const std::size_t> layers) {
  Model work = model;
  work.set_all_frozen(true);
  for (auto l : layers) work.layers.at(l).set_frozen(false);
  return work;
}

double dot_grad(const Tensor& t) {
  double s = 0.0;
  auto d = t.data();
  auto g = t.grad();
  for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * g[i];
  return s;
}

std::vector<std::array<double, kNumUnits>> unit_taylor_table(const Model& model, const Corpus& probe,
                                                             std::span<const std::size_t> layers) {
  Model work = grad_copy(model, layers);
  accumulate_mean_loss_gradient(work, probe);
  std::vector<std::array<double, kNumUnits>> table(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (Unit u : kAllUnits) {
      const Tensor& t = work.layers[layers[i]].unit(u);
      table[i][static_cast<std::size_t>(u)] = dot_grad(t) / static_cast<double>(t.size());
    }
  }
  return table;
}

LayerImportanceReport make_report(LayerImportanceMethod method, const Model& model, const Corpus& probe) {
  require_probe(probe);
  require_unmasked(model);
  LayerImportanceReport r;
  r.method = method;
  r.probe_corpus_id = probe.content_hash();
  r.base_loss = heldout_loss(model, probe);
  return r;
}

}  // namespace

std::string_view method_name(LayerImportanceMethod m) {
  switch (m) {
    case LayerImportanceMethod::kMaskingOut: return "masking_out";
    case LayerImportanceMethod::kTaylorCumulation: return "taylor_cumulation";
    case LayerImportanceMethod::kRankAggregation: return "rank_aggregation";
    case LayerImportanceMethod::kFisher: return "fisher";
  }
  return "?";
}

LayerImportanceMethod parse_method(std::string_view name) {
  for (auto m : {LayerImportanceMethod::kMaskingOut, LayerImportanceMethod::kTaylorCumulation,
                 LayerImportanceMethod::kRankAggregation, LayerImportanceMethod::kFisher}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown importance method '" + std::string(name) + "'");
}

std::string_view normalization_name(NormalizationMode m) {
  return m == NormalizationMode::kMinMax ? "minmax" : "budget_exact";
}

NormalizationMode parse_normalization(std::string_view name) {
  if (name == "minmax") return NormalizationMode::kMinMax;
  if (name == "budget_exact") return NormalizationMode::kBudgetExact;
  throw ConfigError("unknown normalization mode '" + std::string(name) + "'");
}

std::vector<double> LayerImportanceReport::scores() const {
  std::vector<double> out;
  for (const auto& s : per_layer) out.push_back(s.score);
  return out;
}

const UnitScore* UnitImportanceReport::find(std::size_t layer, Unit unit) const {
  for (const auto& s : per_unit) {
    if (s.layer == layer && s.unit == unit) return &s;
  }
  return nullptr;
}

double accumulate_mean_loss_gradient(Model& model, std::span<const Document* const> docs) {
  if (docs.empty()) throw ConfigError("gradient accumulation over zero documents");
  const double inv = 1.0 / static_cast<double>(docs.size());
  double total = 0.0;
  for (const Document* doc : docs) {
    Graph g;
    Var loss = build_lm_loss(g, model, doc->tokens, doc->loss_mask);
    total += g.value(loss).item();
    g.backward(g.scale(loss, inv));
  }
  return total * inv;
}

double accumulate_mean_loss_gradient(Model& model, const Corpus& corpus) {
  std::vector<const Document*> docs;
  for (const auto& d : corpus.documents) docs.push_back(&d);
  return accumulate_mean_loss_gradient(model, docs);
}

LayerImportanceReport layer_importance_masking(const Model& model, const Corpus& probe) {
  auto r = make_report(LayerImportanceMethod::kMaskingOut, model, probe);
  Model work = model;
  for (auto l : original_layers(model)) {
    work.layers[l].set_masked(true);
    r.per_layer.push_back({l, heldout_loss(work, probe) - r.base_loss});
    work.layers[l].set_masked(false);
  }
  return r;
}

LayerImportanceReport layer_importance_taylor_cumulation(const Model& model, const Corpus& probe) {
  auto r = make_report(LayerImportanceMethod::kTaylorCumulation, model, probe);
  const auto layers = original_layers(model);
  Model work = grad_copy(model, layers);
  accumulate_mean_loss_gradient(work, probe);
  for (auto l : layers) {
    double s = 0.0;
    for (Unit u : kAllUnits) s += dot_grad(work.layers[l].unit(u));
    r.per_layer.push_back({l, s});
  }
  return r;
}

LayerImportanceReport layer_importance_fisher(const Model& model, const Corpus& probe) {
  auto r = make_report(LayerImportanceMethod::kFisher, model, probe);
  const auto layers = original_layers(model);
  Model work = grad_copy(model, layers);
  std::vector<double> fisher(layers.size(), 0.0);
  for (const auto& doc : probe.documents) {
    work.zero_grad();
    Graph g;
    g.backward(build_lm_loss(g, work, doc.tokens, doc.loss_mask));
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (Unit u : kAllUnits) {
        for (double v : work.layers[layers[i]].unit(u).grad()) fisher[i] += v * v;
      }
    }
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    r.per_layer.push_back({layers[i], fisher[i] / static_cast<double>(probe.size())});
  }
  return r;
}

std::vector<std::size_t> aggregate_ranks(std::span<const std::array<double, kNumUnits>> table) {
  const std::size_t n = table.size();
  std::vector<std::size_t> total(n, 0);
  std::vector<std::size_t> order(n);
  for (std::size_t u = 0; u < kNumUnits; ++u) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return table[a][u] > table[b][u]; });
    for (std::size_t rank = 0; rank < n; ++rank) total[order[rank]] += rank + 1;
  }
  return total;
}

LayerImportanceReport layer_importance_rank_aggregation(const Model& model, const Corpus& probe) {
  auto r = make_report(LayerImportanceMethod::kRankAggregation, model, probe);
  const auto layers = original_layers(model);
  auto table = unit_taylor_table(model, probe, layers);
  for (auto& row : table) {
    for (auto& v : row) v = std::abs(v);
  }
  const auto ranks = aggregate_ranks(table);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    r.per_layer.push_back({layers[i], -static_cast<double>(ranks[i])});
  }
  return r;
}

LayerImportanceReport layer_importance(const Model& model, const Corpus& probe, LayerImportanceMethod method) {
  switch (method) {
    case LayerImportanceMethod::kMaskingOut: return layer_importance_masking(model, probe);
    case LayerImportanceMethod::kTaylorCumulation: return layer_importance_taylor_cumulation(model, probe);
    case LayerImportanceMethod::kRankAggregation: return layer_importance_rank_aggregation(model, probe);
    case LayerImportanceMethod::kFisher: return layer_importance_fisher(model, probe);
  }
  throw ConfigError("unknown importance method");
}

UnitImportanceReport unit_importance(const Model& model, const Corpus& corpus, std::span<const std::size_t> layer_set,
                                     NormalizationMode mode, std::size_t step) {
  if (layer_set.empty()) throw ConfigError("unit importance needs a non-empty layer set");
  if (corpus.empty()) throw ConfigError("unit importance needs a non-empty corpus");
  for (auto l : layer_set) {
    if (l >= model.layers.size()) throw ConfigError("layer " + std::to_string(l) + " out of range");
  }
  const auto table = unit_taylor_table(model, corpus, layer_set);
  UnitImportanceReport r;
  r.normalization = mode;
  r.computed_at_step = step;
  r.corpus_id = corpus.content_hash();
  std::vector<double> raw;
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < layer_set.size(); ++i) {
    for (Unit u : kAllUnits) {
      UnitScore s;
      s.layer = layer_set[i];
      s.unit = u;
      s.raw = table[i][static_cast<std::size_t>(u)];
      s.size = model.layers[layer_set[i]].unit(u).size();
      raw.push_back(s.raw);
      sizes.push_back(s.size);
      r.per_unit.push_back(s);
    }
  }
  const auto norm = normalize_importance(raw, sizes, mode);
  for (std::size_t i = 0; i < norm.size(); ++i) r.per_unit[i].normalized = norm[i];
  return r;
}

std::vector<double> normalize_importance(std::span<const double> raw, std::span<const std::size_t> sizes,
                                         NormalizationMode mode) {
  if (raw.empty()) throw ConfigError("normalization needs at least one unit");
  if (sizes.size() != raw.size()) throw InvariantError("normalization: raw/size length mismatch");
  const std::size_t n = raw.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::abs(raw[i]);
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  const double mn = *mn_it, mx = *mx_it;
  if (!(mx > mn)) return std::vector<double>(n, 0.5);
  for (auto& x : v) x = (x - mn) / (mx - mn);
  if (mode == NormalizationMode::kMinMax) return v;

  double total_w = 0.0;
  for (auto s : sizes) total_w += static_cast<double>(s);
  if (!(total_w > 0.0)) return std::vector<double>(n, 0.5);
  const double target = 0.5 * total_w;
  // Each pass either lands on the target or pins at least one more entry to a
  // bound, so n + 1 passes suffice; the extra slack absorbs rounding.
  for (std::size_t pass = 0; pass < 2 * n + 8; ++pass) {
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += static_cast<double>(sizes[i]) * v[i];
    const double deficit = target - mass;
    if (std::abs(deficit) <= 1e-13 * total_w) return v;
    double free_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (deficit > 0 ? v[i] < 1.0 : v[i] > 0.0) free_w += static_cast<double>(sizes[i]);
    }
    if (free_w == 0.0) break;
    const double shift = deficit / free_w;
    for (std::size_t i = 0; i < n; ++i) {
      if (deficit > 0 ? v[i] < 1.0 : v[i] > 0.0) v[i] = std::clamp(v[i] + shift, 0.0, 1.0);
    }
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) mass += static_cast<double>(sizes[i]) * v[i];
  if (std::abs(mass / total_w - 0.5) <= 1e-9) return v;
  return std::vector<double>(n, 0.5);
}

nlohmann::json to_json(const LayerImportanceReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : r.per_layer) per.push_back({{"layer", s.layer}, {"score", s.score}});
  return {{"kind", "layer_importance"},
          {"method", method_name(r.method)},
          {"base_loss", r.base_loss},
          {"per_layer", per},
          {"probe_corpus_id", r.probe_corpus_id}};
}

LayerImportanceReport layer_report_from_json(const nlohmann::json& j) {
  try {
    LayerImportanceReport r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.base_loss = j.at("base_loss").get<double>();
    r.probe_corpus_id = j.value("probe_corpus_id", "");
    for (const auto& s : j.at("per_layer")) r.per_layer.push_back({s.at("layer").get<std::size_t>(), s.at("score").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed layer importance report: ") + e.what());
  }
}

nlohmann::json to_json(const UnitImportanceReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : r.per_unit) {
    per.push_back({{"layer", s.layer},
                   {"unit", unit_name(s.unit)},
                   {"raw", s.raw},
                   {"normalized", s.normalized},
                   {"size", s.size}});
  }
  return {{"kind", "unit_importance"},
          {"normalization", normalization_name(r.normalization)},
          {"computed_at_step", r.computed_at_step},
          {"corpus_id", r.corpus_id},
          {"per_unit", per}};
}

UnitImportanceReport unit_report_from_json(const nlohmann::json& j) {
  try {
    UnitImportanceReport r;
    r.normalization = parse_normalization(j.at("normalization").get<std::string>());
    r.computed_at_step = j.value("computed_at_step", std::size_t{0});
    r.corpus_id = j.value("corpus_id", "");
    for (const auto& s : j.at("per_unit")) {
      auto unit = parse_unit(s.at("unit").get<std::string>());
      if (!unit) throw ConfigError("unknown unit '" + s.at("unit").get<std::string>() + "'");
      r.per_unit.push_back({s.at("layer").get<std::size_t>(), *unit, s.at("raw").get<double>(),
                            s.at("normalized").get<double>(), s.at("size").get<std::size_t>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed unit importance report: ") + e.what());
  }
}

}  // namespace adept
