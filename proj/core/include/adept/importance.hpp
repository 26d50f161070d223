// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adept/corpus.hpp"
#include "adept/transformer.hpp"

namespace adept {

enum class LayerImportanceMethod : std::uint8_t { kMaskingOut, kTaylorCumulation, kRankAggregation, kFisher };

std::string_view method_name(LayerImportanceMethod m);
LayerImportanceMethod parse_method(std::string_view name);

struct LayerScore {
  std::size_t layer = 0;  // position in Model::layers
  double score = 0.0;
};

/// Scores for every original (non-expanded) layer. Under every method a
/// smaller score means "less important for the probe corpus".
struct LayerImportanceReport {
  LayerImportanceMethod method = LayerImportanceMethod::kMaskingOut;
  double base_loss = 0.0;  // nats, mean over probe documents
  std::vector<LayerScore> per_layer;
  std::string probe_corpus_id;

  std::vector<double> scores() const;
};

enum class NormalizationMode : std::uint8_t { kMinMax, kBudgetExact };

std::string_view normalization_name(NormalizationMode m);
NormalizationMode parse_normalization(std::string_view name);

struct UnitScore {
  std::size_t layer = 0;
  Unit unit = Unit::kQProj;
  double raw = 0.0;         // mean of theta * dL/dtheta over the unit
  double normalized = 0.0;  // in [0, 1]
  std::size_t size = 0;
};

struct UnitImportanceReport {
  std::vector<UnitScore> per_unit;
  NormalizationMode normalization = NormalizationMode::kMinMax;
  std::size_t computed_at_step = 0;
  std::string corpus_id;

  const UnitScore* find(std::size_t layer, Unit unit) const;
};

/// Adds the gradient of the mean per-document loss over `docs` into every
/// tensor of `model` that requires grad, one graph per document in order.
/// Returns the mean loss.
double accumulate_mean_loss_gradient(Model& model, std::span<const Document* const> docs);
double accumulate_mean_loss_gradient(Model& model, const Corpus& corpus);

/// Loss increase when each layer's residual branch is bypassed:
/// score(l) = loss(model with only l masked) - base_loss. Scores are signed.
LayerImportanceReport layer_importance_masking(const Model& model, const Corpus& probe);
/// Sum over the layer's parameters of p * dL/dp, gradients of the mean
/// probe loss accumulated over the whole probe corpus.
LayerImportanceReport layer_importance_taylor_cumulation(const Model& model, const Corpus& probe);
/// Per-parameter E[(dl/dp)^2] over probe documents, summed within the layer.
LayerImportanceReport layer_importance_fisher(const Model& model, const Corpus& probe);
/// Layers ranked within each unit type by |unit Taylor score| (rank 1 = most
/// important, lower layer index first on ties); score = -(sum of ranks).
LayerImportanceReport layer_importance_rank_aggregation(const Model& model, const Corpus& probe);

LayerImportanceReport layer_importance(const Model& model, const Corpus& probe, LayerImportanceMethod method);

/// table[l][u] is the score of unit u in layer l. Returns the summed rank of
/// every layer as described for rank aggregation.
std::vector<std::size_t> aggregate_ranks(std::span<const std::array<double, kNumUnits>> table);

/// Per-unit Taylor scores for the layers in layer_set, using gradients of
/// the mean loss over `corpus`. The model is not modified.
UnitImportanceReport unit_importance(const Model& model, const Corpus& corpus, std::span<const std::size_t> layer_set,
                                     NormalizationMode mode = NormalizationMode::kMinMax, std::size_t step = 0);

/// Maps |raw| into [0, 1].
///   minmax:       (|r| - min) / (max - min); all-equal input gives 0.5.
///   budget_exact: minmax, then free (unclamped) entries are shifted
///                 uniformly and clamped until the size-weighted mean is 0.5;
///                 all 0.5 if no such assignment exists.
std::vector<double> normalize_importance(std::span<const double> raw, std::span<const std::size_t> sizes,
                                         NormalizationMode mode);

nlohmann::json to_json(const LayerImportanceReport& r);
LayerImportanceReport layer_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UnitImportanceReport& r);
UnitImportanceReport unit_report_from_json(const nlohmann::json& j);

}  // namespace adept
