// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adept/corpus.hpp"
#include "adept/importance.hpp"
#include "adept/transformer.hpp"

namespace adept {

enum class TrainMode : std::uint8_t { kAdept, kFull, kUniformExpand, kExpandNoDecouple };
enum class Schedule : std::uint8_t { kCosine, kConstant };

std::string_view mode_name(TrainMode m);
TrainMode parse_mode(std::string_view name);
std::string_view schedule_name(Schedule s);
Schedule parse_schedule(std::string_view name);

struct TrainConfig {
  double lr_base = 1e-3;
  double warmup_ratio = 0.03;
  Schedule schedule = Schedule::kCosine;
  std::size_t batch_size = 4;
  std::size_t total_steps = 100;
  std::size_t recompute_interval = 500;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kAdept;
  NormalizationMode normalization_mode = NormalizationMode::kMinMax;
  double clip_norm = 0.0;          // global gradient-norm clip; 0 disables
  std::size_t eval_interval = 0;   // held-out evaluation period; 0 = last step only

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

using UnitKey = std::pair<std::size_t, Unit>;

struct LrAssignment {
  std::map<UnitKey, double> per_unit;  // multiplier m_U in [0, 2]
  std::size_t step_computed = 0;

  /// Throws InvariantError if the unit has no entry.
  double multiplier(std::size_t layer, Unit unit) const;
  std::string hash() const;
};

/// m_U = 2 (1 - I_U) for every unit in the report.
LrAssignment assign_unit_lrs(const UnitImportanceReport& report);
/// Same, and checks that the report covers every trainable unit of `model`
/// (ConfigError listing the missing ones).
LrAssignment assign_unit_lrs(const UnitImportanceReport& report, const Model& model);
/// Multiplier 1 on every trainable unit.
LrAssignment uniform_assignment(const Model& model, std::size_t step = 0);

/// Linear warmup from 0 to 1 over ceil(warmup_ratio * total_steps) steps,
/// then cosine decay towards 0 (or flat 1 for the constant schedule).
double schedule_lr(std::size_t step, const TrainConfig& config);
/// schedule_lr(step) * m_U * lr_base.
double effective_lr(std::size_t step, const TrainConfig& config, const LrAssignment& a, std::size_t layer, Unit unit);

/// Seeded epoch-wise permutation of document indices.
class BatchCursor {
 public:
  BatchCursor(std::size_t n_docs, std::size_t batch_size, std::uint64_t seed);
  /// The indices next() would return, without advancing.
  std::vector<std::size_t> peek() const;
  std::vector<std::size_t> next();

 private:
  void reshuffle();
  std::size_t n_docs_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::size_t pos_ = 0;
  std::vector<std::size_t> order_;
};

/// One plain SGD step on the mean per-document loss of `batch`. Embedding,
/// head and final norm use multiplier 1 when trainable. On a non-finite loss
/// or gradient nothing is applied, gradients are cleared and NumericError is
/// thrown. Returns the batch loss before the update.
double train_step(Model& model, std::span<const Document* const> batch, const LrAssignment& assignment,
                  std::size_t step, const TrainConfig& config);

struct TrainResult {
  std::vector<nlohmann::json> metrics;  // one object per step
  std::vector<LrAssignment> assignments;  // one per recompute
  std::vector<UnitImportanceReport> unit_reports;  // adept mode only
};

/// Continual pretraining loop. Expanded modes need an expanded model and full
/// mode needs a fully trainable, un-expanded one. At every step with
/// step % recompute_interval == 0 the assignment is refreshed; in adept mode
/// from unit importance of the expanded layers on the upcoming batch.
TrainResult train_cpt(Model& model, const Corpus& corpus, const TrainConfig& config,
                      const Corpus* general_eval = nullptr, const Corpus* target_eval = nullptr,
                      const std::function<void(const nlohmann::json&)>& on_step = {});

}  // namespace adept
