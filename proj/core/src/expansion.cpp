// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adept/checkpoint.hpp"
#include "adept/error.hpp"
#include "adept/random.hpp"

namespace adept {
namespace {

std::string display_method(LayerImportanceMethod m) {
  switch (m) {
    case LayerImportanceMethod::kMaskingOut: return "Masking Out";
    case LayerImportanceMethod::kTaylorCumulation: return "Importance Cumulation";
    case LayerImportanceMethod::kRankAggregation: return "Rank Aggregation";
    case LayerImportanceMethod::kFisher: return "Fisher";
  }
  return "?";
}

}  // namespace

std::string_view strategy_name(ExpansionStrategy s) {
  switch (s) {
    case ExpansionStrategy::kImportanceGuided: return "importance_guided";
    case ExpansionStrategy::kUniform: return "uniform";
    case ExpansionStrategy::kUniformFirstHalf: return "uniform_first_half";
    case ExpansionStrategy::kUniformLastHalf: return "uniform_last_half";
  }
  return "?";
}

ExpansionStrategy parse_strategy(std::string_view name) {
  for (auto s : {ExpansionStrategy::kImportanceGuided, ExpansionStrategy::kUniform,
                 ExpansionStrategy::kUniformFirstHalf, ExpansionStrategy::kUniformLastHalf}) {
    if (strategy_name(s) == name) return s;
  }
  throw ConfigError("unknown expansion strategy '" + std::string(name) + "'");
}

void ExpansionPlan::validate() const {
  if (source_layers.size() != k) {
    throw InvariantError("plan lists " + std::to_string(source_layers.size()) + " sources for k=" + std::to_string(k));
  }
  for (std::size_t i = 0; i < source_layers.size(); ++i) {
    if (source_layers[i] >= n_layers) {
      throw InvariantError("plan source " + std::to_string(source_layers[i]) + " outside " +
                           std::to_string(n_layers) + " layers");
    }
    if (i > 0 && source_layers[i] <= source_layers[i - 1]) throw InvariantError("plan sources must be sorted and distinct");
  }
  if (insertion_positions != insertion_positions_for(source_layers)) {
    throw InvariantError("plan insertion positions do not follow their sources");
  }
}

std::string ExpansionPlan::display_name() const {
  std::string name = strategy == ExpansionStrategy::kImportanceGuided ? display_method(method)
                     : strategy == ExpansionStrategy::kUniform        ? "Uniform"
                     : strategy == ExpansionStrategy::kUniformFirstHalf ? "Uniform First Half"
                                                                        : "Uniform Last Half";
  name += " (";
  for (std::size_t i = 0; i < source_layers.size(); ++i) name += (i ? "," : "") + std::to_string(source_layers[i]);
  return name + ")";
}

std::vector<std::size_t> insertion_positions_for(std::span<const std::size_t> sorted_sources) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < sorted_sources.size(); ++i) pos.push_back(sorted_sources[i] + i + 1);
  return pos;
}

ExpansionPlan select_layers(const LayerImportanceReport& report, std::size_t k) {
  const std::size_t n = report.per_layer.size();
  if (k < 1 || k > n) {
    throw ConfigError("k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& la = report.per_layer[a];
    const auto& lb = report.per_layer[b];
    return la.score < lb.score || (la.score == lb.score && la.layer < lb.layer);
  });
  ExpansionPlan plan;
  plan.strategy = ExpansionStrategy::kImportanceGuided;
  plan.k = k;
  plan.n_layers = n;
  plan.method = report.method;
  for (std::size_t i = 0; i < k; ++i) plan.source_layers.push_back(report.per_layer[order[i]].layer);
  std::sort(plan.source_layers.begin(), plan.source_layers.end());
  plan.insertion_positions = insertion_positions_for(plan.source_layers);
  plan.report_hash = hash_hex(fnv1a64(canonical_dump(to_json(report))));
  return plan;
}

ExpansionPlan plan_uniform(std::size_t n_layers, std::size_t k, ExpansionStrategy variant, std::size_t span) {
  if (variant == ExpansionStrategy::kImportanceGuided) throw ConfigError("plan_uniform needs a uniform strategy");
  if (n_layers == 0) throw ConfigError("plan_uniform on a model with no layers");
  const std::size_t half = (n_layers + 1) / 2;
  if (span == 0) span = variant == ExpansionStrategy::kUniform ? n_layers : half;
  if (span > n_layers) throw ConfigError("uniform span " + std::to_string(span) + " exceeds " + std::to_string(n_layers) + " layers");
  if (k < 1 || k > span) {
    throw ConfigError("k=" + std::to_string(k) + " must lie in [1, " + std::to_string(span) + "] for this span");
  }
  const std::size_t start = variant == ExpansionStrategy::kUniformLastHalf ? n_layers - span : 0;
  ExpansionPlan plan;
  plan.strategy = variant;
  plan.k = k;
  plan.n_layers = n_layers;
  for (std::size_t i = 0; i < k; ++i) plan.source_layers.push_back(start + (i + 1) * span / k - 1);
  plan.insertion_positions = insertion_positions_for(plan.source_layers);
  return plan;
}

Model expand(const Model& model, const ExpansionPlan& plan) {
  if (plan.k == 0) return model;
  plan.validate();
  if (model.n_expanded() != 0) throw InvariantError("model is already expanded");
  if (plan.n_layers != model.layers.size()) {
    throw InvariantError("plan built for " + std::to_string(plan.n_layers) + " layers, model has " +
                         std::to_string(model.layers.size()));
  }
  Model out;
  out.config = model.config;
  out.token_embedding = model.token_embedding;
  out.final_norm = model.final_norm;
  out.lm_head = model.lm_head;
  std::size_t next = 0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    Layer original = model.layers[l];
    original.set_frozen(true);
    out.layers.push_back(original);
    if (next < plan.source_layers.size() && plan.source_layers[next] == l) {
      Layer copy = model.layers[l];
      copy.mark_copy_of(static_cast<int>(l));
      copy.unit(Unit::kOProj).fill(0.0);
      copy.unit(Unit::kDownProj).fill(0.0);
      copy.set_frozen(false);
      out.layers.push_back(std::move(copy));
      ++next;
    }
  }
  out.config.n_layers = out.layers.size();
  out.set_shared_frozen(true);
  for (std::size_t i = 1; i < out.layers.size(); ++i) {
    if (out.layers[i].is_expanded() && out.layers[i - 1].is_expanded()) {
      throw InvariantError("adjacent expanded layers at " + std::to_string(i));
    }
  }
  return out;
}

double verify_function_preserving(const Model& m0, const Model& m1, std::size_t trials, std::uint64_t seed) {
  if (m0.config.vocab_size != m1.config.vocab_size || m0.config.d_model != m1.config.d_model) {
    throw ConfigError("function-preservation check needs matching vocab and width");
  }
  const std::size_t max_len = std::min(m0.config.max_seq_len, m1.config.max_seq_len);
  Rng rng(seed);
  double worst = 0.0;
  std::vector<int> tokens;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t len = max_len < 2 ? max_len : 2 + rng.index(max_len - 1);
    tokens.resize(len);
    for (auto& id : tokens) id = static_cast<int>(rng.index(m0.config.vocab_size));
    const Tensor a = forward_logits(m0, tokens);
    const Tensor b = forward_logits(m1, tokens);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

std::vector<std::size_t> expanded_sources(const Model& model) {
  std::vector<std::size_t> out;
  for (const auto& layer : model.layers) {
    if (layer.is_expanded()) out.push_back(static_cast<std::size_t>(layer.source()));
  }
  return out;
}

nlohmann::json to_json(const ExpansionPlan& plan) {
  return {{"kind", "expansion_plan"},
          {"strategy", strategy_name(plan.strategy)},
          {"method", method_name(plan.method)},
          {"k", plan.k},
          {"n_layers", plan.n_layers},
          {"sources", plan.source_layers},
          {"positions", plan.insertion_positions},
          {"name", plan.display_name()},
          {"report_hash", plan.report_hash}};
}

ExpansionPlan plan_from_json(const nlohmann::json& j) {
  try {
    ExpansionPlan plan;
    plan.strategy = parse_strategy(j.at("strategy").get<std::string>());
    plan.method = parse_method(j.value("method", std::string("masking_out")));
    plan.k = j.at("k").get<std::size_t>();
    plan.n_layers = j.at("n_layers").get<std::size_t>();
    plan.source_layers = j.at("sources").get<std::vector<std::size_t>>();
    plan.insertion_positions = j.at("positions").get<std::vector<std::size_t>>();
    plan.report_hash = j.value("report_hash", "");
    plan.validate();
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed expansion plan: ") + e.what());
  }
}

}  // namespace adept
