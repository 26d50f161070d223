// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adept/corpus.hpp"
#include "adept/tensor.hpp"
#include "adept/transformer.hpp"

namespace adept {

// ---- token distribution shift ----

enum class ShiftCategory : std::uint8_t { kUnshifted, kMarginal, kShifted };

std::string_view category_name(ShiftCategory c);
/// rank 1 -> unshifted, 2..3 -> marginal, >3 -> shifted.
ShiftCategory categorize(std::size_t base_rank);

/// 1 + number of tokens ranked ahead of `token`; ties go to the lower id.
std::size_t token_rank(std::span<const double> logits, int token);
/// Highest logit, lowest id on ties.
int greedy_token(std::span<const double> logits);

struct TokenShiftRecord {
  std::size_t doc = 0;
  std::size_t position = 0;
  int aligned_token = 0;
  std::size_t base_rank = 1;
  std::size_t aligned_rank = 1;
  ShiftCategory category = ShiftCategory::kUnshifted;
  double rank_improvement_ratio = 1.0;  // base_rank / aligned_rank
};

struct TokenShiftReport {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> fractions{};
  std::size_t total = 0;
  std::vector<TokenShiftRecord> top_shifted;  // highest ratio first

  double fraction(ShiftCategory c) const { return fractions[static_cast<std::size_t>(c)]; }
};

/// Accumulates records from one pair of [T, V] logit tables (base, tuned).
class TokenShiftAccumulator {
 public:
  explicit TokenShiftAccumulator(std::size_t top_n = 20) : top_n_(top_n) {}
  void add(const Tensor& base_logits, const Tensor& tuned_logits, std::size_t doc = 0);
  TokenShiftReport report() const;

 private:
  std::size_t top_n_;
  std::array<std::size_t, 3> counts_{};
  std::vector<TokenShiftRecord> shifted_;
};

/// Teacher-forced over every position of every document.
TokenShiftReport token_shift_analysis(const Model& base, const Model& tuned, const Corpus& corpus,
                                      std::size_t top_n = 20);

nlohmann::json to_json(const TokenShiftReport& r);

// ---- merging ----

struct MergeSpec {
  std::vector<double> weights;  // one per model
};

/// Expanded-layer parameters become the weighted sum over models; everything
/// else comes from the first model. All models must share the layer layout
/// and hold bit-identical original parameters.
Model merge_expanded(std::span<const Model> models, const MergeSpec& spec);

// ---- activations and density ----

struct ActivationSample {
  std::string corpus_tag;
  std::size_t doc_index = 0;
  double value = 0.0;
};

struct ActivationCapture {
  std::size_t layer = 0;
  std::string projection = "mean_over_positions_and_dims";
  bool truncated = false;  // fewer documents than requested
  std::vector<ActivationSample> samples;
};

/// Per sampled document, the mean of the residual stream after `layer` over
/// all positions and dimensions. Documents are drawn without replacement by
/// `seed` and reported in corpus order.
ActivationCapture activation_capture(const Model& model, const Corpus& corpus, std::size_t layer,
                                     std::size_t n_samples, std::uint64_t seed = 0);

/// Header "corpus_tag,doc_index,value".
std::string activations_to_csv(std::span<const ActivationCapture> captures);

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// 1.06 * sample standard deviation * n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian KDE on `points` evenly spaced values over [min - 3h, max + 3h].
KdeCurve kde_1d(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt,
                std::size_t points = 256);

nlohmann::json to_json(const KdeCurve& c);

// ---- learning-rate allocation ----

struct OptimalLrProblem {
  std::vector<double> w;  // unit sizes
  std::vector<double> importance;
  double a = 1.0;
  double b = 1.0;
  double eta_avg = 1.0;

  void validate() const;
};

/// a * sum w_i I_i eta_i + b * sum w_i eta_i^2.
double lr_bound(const OptimalLrProblem& p, std::span<const double> eta);

struct OptimalLrSolution {
  std::vector<double> eta;
  double bound = 0.0;
};

/// Minimiser of lr_bound subject to sum w_i eta_i = eta_avg * sum w_i:
/// eta_i = eta_avg - a / (2b) * (I_i - weighted mean of I).
OptimalLrSolution optimal_lr_closed_form(const OptimalLrProblem& p);

}  // namespace adept
