// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "adept/transformer.hpp"

namespace adept {

struct GradCheckOptions {
  std::size_t seq_len = 16;
  double eps = 1e-5;
  double floor = 1e-6;      // relative-error denominator floor
  double tolerance = 1e-4;  // pass iff every relative error is below this
  std::uint64_t seed = 0;
};

struct TensorGradCheck {
  std::string name;
  std::size_t size = 0;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<TensorGradCheck> tensors;
  double max_relative_error = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

/// Compares the autodiff gradient of the LM loss on a random sequence with a
/// central finite difference for every parameter of `model`.
GradCheckReport grad_check_model(const Model& model, const GradCheckOptions& options = {});

nlohmann::json to_json(const GradCheckReport& r);

}  // namespace adept
