// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adept/importance.hpp"
#include "adept/transformer.hpp"

namespace adept {

enum class ExpansionStrategy : std::uint8_t { kImportanceGuided, kUniform, kUniformFirstHalf, kUniformLastHalf };

std::string_view strategy_name(ExpansionStrategy s);
ExpansionStrategy parse_strategy(std::string_view name);

struct ExpansionPlan {
  ExpansionStrategy strategy = ExpansionStrategy::kImportanceGuided;
  std::size_t k = 0;
  std::size_t n_layers = 0;                    // depth of the un-expanded model
  std::vector<std::size_t> source_layers;      // sorted, distinct
  std::vector<std::size_t> insertion_positions;  // index of each copy in the expanded layer list
  LayerImportanceMethod method = LayerImportanceMethod::kMaskingOut;  // importance_guided only
  std::string report_hash;

  /// Throws InvariantError if sources are unsorted, repeated, out of range or
  /// disagree with k / insertion_positions.
  void validate() const;
  /// "Masking Out (22,23,25,27)", "Uniform (6,13,20,27)", ...
  std::string display_name() const;

  friend bool operator==(const ExpansionPlan&, const ExpansionPlan&) = default;
};

/// Positions of the copies once each is inserted right after its source.
std::vector<std::size_t> insertion_positions_for(std::span<const std::size_t> sorted_sources);

/// The k smallest-score layers of `report`; ties go to the lower index.
ExpansionPlan select_layers(const LayerImportanceReport& report, std::size_t k);

/// Evenly spaced sources: start + floor((i + 1) * span / k) - 1 for i < k.
/// span = 0 picks the whole depth (uniform) or ceil(n/2) (half variants).
ExpansionPlan plan_uniform(std::size_t n_layers, std::size_t k, ExpansionStrategy variant, std::size_t span = 0);

/// Inserts function-preserving copies after each source. Copies are trainable
/// with zeroed o_proj and down_proj; every original layer plus the embedding,
/// head and final norm is frozen. A k = 0 plan returns the model unchanged.
Model expand(const Model& model, const ExpansionPlan& plan);

/// Max |logit difference| between the two models over `trials` random
/// sequences of random length in [2, max_seq_len].
double verify_function_preserving(const Model& m0, const Model& m1, std::size_t trials, std::uint64_t seed = 0);

/// Sources recorded on the expanded layers of `model`, in layer order.
std::vector<std::size_t> expanded_sources(const Model& model);

nlohmann::json to_json(const ExpansionPlan& plan);
ExpansionPlan plan_from_json(const nlohmann::json& j);

}  // namespace adept
