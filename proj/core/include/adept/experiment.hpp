// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "adept/corpus.hpp"
#include "adept/expansion.hpp"
#include "adept/importance.hpp"
#include "adept/synthetic.hpp"
#include "adept/trainer.hpp"
#include "adept/transformer.hpp"

namespace adept {

using Logger = std::function<void(const std::string&)>;

/// Two-domain continual-pretraining setup: pretrain on a general corpus,
/// then adapt to a target corpus under several training arms.
struct ForgettingConfig {
  ModelConfig model{.n_layers = 6, .d_model = 64, .n_heads = 4, .d_ff = 128, .vocab_size = 259, .max_seq_len = 48,
                    .seed = 11, .tie_embeddings = true};
  WindowConfig window{48, 36, 12};
  std::size_t general_docs = 2000;
  std::size_t target_docs = 1000;
  std::size_t eval_docs = 48;   // held-out documents per domain (before segmentation)
  std::size_t probe_docs = 32;
  synthetic::Domain target = synthetic::Domain::kNumberWords;
  std::uint64_t data_seed = 2026;

  TrainConfig pretrain{.lr_base = 0.5, .warmup_ratio = 0.02, .schedule = Schedule::kCosine, .batch_size = 8,
                       .total_steps = 3000, .recompute_interval = 1000000, .seed = 1, .mode = TrainMode::kFull,
                       .normalization_mode = NormalizationMode::kMinMax, .clip_norm = 1.0, .eval_interval = 250};
  TrainConfig cpt{.lr_base = 0.015, .warmup_ratio = 0.03, .schedule = Schedule::kCosine, .batch_size = 4,
                  .total_steps = 1000, .recompute_interval = 100, .seed = 2, .mode = TrainMode::kAdept,
                  .normalization_mode = NormalizationMode::kBudgetExact, .clip_norm = 1.0, .eval_interval = 0};
  std::size_t k = 2;
  LayerImportanceMethod method = LayerImportanceMethod::kMaskingOut;
};

nlohmann::json to_json(const ForgettingConfig& c);

struct DomainData {
  Corpus train;
  Corpus eval;
};

/// Segmented train / held-out corpora for a synthetic domain. Held-out
/// documents come from a seed disjoint from the training seed.
DomainData make_domain_data(synthetic::Domain domain, std::size_t train_docs, std::size_t eval_docs,
                            std::uint64_t seed, const WindowConfig& window);

struct PretrainResult {
  Model model;
  std::vector<double> heldout_curve;  // held-out loss every eval_interval steps
  double final_train_loss = 0.0;
  /// Relative held-out improvement over the last evaluation interval.
  double last_relative_improvement = 0.0;
};

PretrainResult pretrain_model(const ModelConfig& config, const Corpus& train, const Corpus& heldout,
                              TrainConfig tc, const Logger& log = {});

struct ArmResult {
  std::string name;
  TrainMode mode = TrainMode::kFull;
  ExpansionPlan plan;  // k = 0 for full training
  Model model;
  double general_before = 0.0;
  double general_after = 0.0;
  double target_before = 0.0;
  double target_after = 0.0;
  double seconds = 0.0;
  TrainResult training;

  double general_increase() const { return general_after - general_before; }
  double target_decrease() const { return target_before - target_after; }
};

/// Prepares `base` for `mode` (expanding with `plan` unless mode is full)
/// and runs continual pretraining on `target.train`.
ArmResult run_arm(const std::string& name, const Model& base, TrainMode mode, const ExpansionPlan& plan,
                  const DomainData& general, const DomainData& target, TrainConfig tc, const Logger& log = {});

struct ForgettingResult {
  PretrainResult pretrained;
  LayerImportanceReport report;
  ExpansionPlan adept_plan;
  ExpansionPlan uniform_plan;
  DomainData general;
  DomainData target;
  std::vector<ArmResult> arms;  // full, uniform_expand, adept

  const ArmResult& arm(const std::string& name) const;
};

ForgettingResult run_forgetting_experiment(const ForgettingConfig& config, const Logger& log = {});

nlohmann::json summarize(const ForgettingResult& r);

struct SweepRow {
  std::size_t k = 0;
  std::string plan_name;
  double general_loss = 0.0;
  double target_loss = 0.0;
  std::size_t trainable_parameters = 0;
};

/// Importance-guided expansion plus adept training for each k in `ks`,
/// all starting from `base`.
std::vector<SweepRow> sweep_k(const Model& base, const LayerImportanceReport& report, std::span<const std::size_t> ks,
                              const DomainData& general, const DomainData& target, const TrainConfig& tc,
                              const Logger& log = {});

nlohmann::json to_json(const SweepRow& row);

}  // namespace adept
