// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "adept/corpus.hpp"
#include "adept/expansion.hpp"
#include "adept/importance.hpp"
#include "adept/trainer.hpp"
#include "adept/transformer.hpp"

namespace adept {

inline constexpr std::string_view kRunConfigFormat = "adept-run-config/1";
inline constexpr const char* kReportDirEnv = "ADEPT_REPORT_DIR";

struct ExpansionSettings {
  ExpansionStrategy strategy = ExpansionStrategy::kImportanceGuided;
  std::size_t k = 2;
  LayerImportanceMethod importance_method = LayerImportanceMethod::kMaskingOut;
  std::size_t span = 0;  // uniform variants only; 0 = default span
};

struct RunPaths {
  std::filesystem::path train_corpus;
  std::filesystem::path probe_corpus;
  std::filesystem::path general_eval;
  std::filesystem::path target_eval;
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path report_dir = "reports";
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  ExpansionSettings expansion;
  WindowConfig window{64, 48, 16};
  RunPaths paths;

  /// Model and train sections, k against the layer count, and existence of
  /// every non-empty input path.
  void validate() const;
};

/// Parses a run config. `format` must equal kRunConfigFormat; relative paths
/// resolve against `base_dir`. Missing sections keep their defaults and the
/// report dir falls back to $ADEPT_REPORT_DIR when the file names none.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

/// Loads a JSON-lines corpus and splits it into model-sized windows.
Corpus load_segmented_corpus(const std::filesystem::path& path, const RunConfig& config);

/// Writes `bytes` atomically and a sibling "<name>.fnv1a64" holding its hash.
/// Returns the hash.
std::string write_artifact(const std::filesystem::path& path, std::string_view bytes);
/// save_checkpoint plus the hash sidecar.
std::string write_checkpoint_artifact(const Model& model, const std::filesystem::path& path);

}  // namespace adept
