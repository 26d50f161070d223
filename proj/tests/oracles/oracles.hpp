// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations shared by unit and acceptance tests.
// Each is written for obviousness, not speed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace adept::oracle {

/// [begin, end) of each window found by walking forward one stride at a time
/// until a window reaches the end of the sequence.
inline std::vector<std::pair<std::size_t, std::size_t>> slices(std::size_t length, std::size_t window,
                                                               std::size_t stride) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0;; start += stride) {
    out.emplace_back(start, std::min(start + window, length));
    if (start + window >= length) break;
  }
  return out;
}

/// Indices of the k-subset with the smallest score sum; among equal sums the
/// lexicographically smallest index set wins. Enumerates all bitmasks.
inline std::vector<std::size_t> best_subset(const std::vector<double>& scores, std::size_t k) {
  const std::size_t n = scores.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_set;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::size_t> set;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        set.push_back(i);
        sum += scores[i];
      }
    }
    if (sum < best || (sum == best && set < best_set)) {
      best = sum;
      best_set = set;
    }
  }
  return best_set;
}

inline double subset_sum(const std::vector<double>& scores, const std::vector<std::size_t>& set) {
  double s = 0.0;
  for (auto i : set) s += scores[i];
  return s;
}

/// Gaussian KDE evaluated at a single point by direct summation.
inline double kde_at(const std::vector<double>& samples, double h, double x) {
  double s = 0.0;
  for (double xi : samples) {
    const double u = (x - xi) / h;
    s += std::exp(-0.5 * u * u);
  }
  return s / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace adept::oracle
