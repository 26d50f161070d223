// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/grad_check.hpp"

#include <chrono>

#include "adept/error.hpp"
#include "adept/graph.hpp"
#include "adept/random.hpp"

namespace adept {
namespace {

std::vector<std::string> tensor_names(const Model& m) {
  std::vector<std::string> names{"token_embedding"};
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    for (Unit u : kAllUnits) names.push_back("layers." + std::to_string(l) + "." + std::string(unit_name(u)));
  }
  names.emplace_back("final_norm");
  if (m.lm_head.size() > 0) names.emplace_back("lm_head");
  return names;
}

}  // namespace

GradCheckReport grad_check_model(const Model& model, const GradCheckOptions& options) {
  if (options.seq_len < 2 || options.seq_len > model.config.max_seq_len) {
    throw ConfigError("grad-check sequence length must lie in [2, max_seq_len]");
  }
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(options.seed);
  std::vector<int> tokens(options.seq_len);
  for (auto& t : tokens) t = static_cast<int>(rng.index(model.config.vocab_size));

  Model work = model;
  work.clear_masks();
  work.set_all_frozen(false);
  {
    Graph g;
    g.backward(build_lm_loss(g, work, tokens, std::vector<bool>(tokens.size(), true)));
  }
  GradCheckReport report;
  const auto names = tensor_names(work);
  auto tensors = work.tensors();
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    Tensor& t = *tensors[ti];
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    const auto numeric = fd_gradient([&](const Tensor&) { return lm_loss(work, tokens); }, t, options.eps);
    TensorGradCheck c{names.at(ti), t.size(), 0.0, 0};
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = relative_error(analytic[i], numeric[i], options.floor);
      if (e > c.max_relative_error) {
        c.max_relative_error = e;
        c.worst_index = i;
      }
    }
    report.max_relative_error = std::max(report.max_relative_error, c.max_relative_error);
    report.tensors.push_back(std::move(c));
  }
  report.passed = report.max_relative_error < options.tolerance;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

nlohmann::json to_json(const GradCheckReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& t : r.tensors) {
    per.push_back({{"name", t.name},
                   {"size", t.size},
                   {"max_relative_error", t.max_relative_error},
                   {"worst_index", t.worst_index}});
  }
  return {{"kind", "grad_check"},
          {"passed", r.passed},
          {"max_relative_error", r.max_relative_error},
          {"tensors", per}};
}

}  // namespace adept
