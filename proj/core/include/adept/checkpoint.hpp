// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "adept/transformer.hpp"

namespace adept {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

/// Checkpoint layout: one line of compact JSON (config, per-layer origin /
/// source / frozen flags, tensor names and shapes, format version) terminated
/// by '\n', followed by the tensors as little-endian IEEE-754 binary32 in the
/// order the header lists them. Values are rounded to float on save and
/// widened back to double on load.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 hex digits by hash_hex.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hash_hex(std::uint64_t h);

/// Canonical JSON text: sorted keys (nlohmann's default object ordering),
/// two-space indent, trailing newline.
std::string canonical_dump(const nlohmann::json& j);

}  // namespace adept
