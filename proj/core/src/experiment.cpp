// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/experiment.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "adept/checkpoint.hpp"
#include "adept/error.hpp"
#include "adept/evaluation.hpp"

namespace adept {
namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(5);
  s << std::fixed << v;
  return s.str();
}

}  // namespace

nlohmann::json to_json(const ForgettingConfig& c) {
  return {{"model", config_to_json(c.model)},
          {"window", {c.window.window, c.window.stride, c.window.overlap}},
          {"general_docs", c.general_docs},
          {"target_docs", c.target_docs},
          {"eval_docs", c.eval_docs},
          {"probe_docs", c.probe_docs},
          {"target", synthetic::domain_name(c.target)},
          {"data_seed", c.data_seed},
          {"pretrain", to_json(c.pretrain)},
          {"cpt", to_json(c.cpt)},
          {"k", c.k},
          {"method", method_name(c.method)}};
}

DomainData make_domain_data(synthetic::Domain domain, std::size_t train_docs, std::size_t eval_docs,
                            std::uint64_t seed, const WindowConfig& window) {
  DomainData d;
  d.train = segment_corpus(synthetic::corpus(domain, train_docs, seed), window);
  d.eval = segment_corpus(synthetic::corpus(domain, eval_docs, seed ^ 0x5eedf00dULL), window);
  return d;
}

PretrainResult pretrain_model(const ModelConfig& config, const Corpus& train, const Corpus& heldout, TrainConfig tc,
                              const Logger& log) {
  tc.mode = TrainMode::kFull;
  PretrainResult r;
  r.model = init_model(config);
  auto result = train_cpt(r.model, train, tc, &heldout, nullptr, [&](const nlohmann::json& m) {
    if (m.contains("general_heldout_loss")) {
      const double h = m["general_heldout_loss"].get<double>();
      r.heldout_curve.push_back(h);
      say(log, "pretrain step " + std::to_string(m["step"].get<std::size_t>() + 1) + " heldout " + fmt(h));
    }
  });
  r.final_train_loss = result.metrics.back()["loss"].get<double>();
  if (r.heldout_curve.size() >= 2) {
    const double prev = r.heldout_curve[r.heldout_curve.size() - 2];
    r.last_relative_improvement = (prev - r.heldout_curve.back()) / prev;
  }
  return r;
}

ArmResult run_arm(const std::string& name, const Model& base, TrainMode mode, const ExpansionPlan& plan,
                  const DomainData& general, const DomainData& target, TrainConfig tc, const Logger& log) {
  const auto t0 = std::chrono::steady_clock::now();
  ArmResult arm;
  arm.name = name;
  arm.mode = mode;
  arm.plan = plan;
  if (mode == TrainMode::kFull) {
    arm.model = base;
    arm.model.set_all_frozen(false);
    arm.plan = ExpansionPlan{};
    arm.plan.n_layers = base.layers.size();
  } else {
    arm.model = expand(base, plan);
  }
  arm.general_before = heldout_loss(arm.model, general.eval);
  arm.target_before = heldout_loss(arm.model, target.eval);
  tc.mode = mode;
  arm.training = train_cpt(arm.model, target.train, tc, &general.eval, &target.eval);
  arm.general_after = heldout_loss(arm.model, general.eval);
  arm.target_after = heldout_loss(arm.model, target.eval);
  arm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  say(log, name + ": general " + fmt(arm.general_before) + " -> " + fmt(arm.general_after) + ", target " +
               fmt(arm.target_before) + " -> " + fmt(arm.target_after) + " (" + fmt(arm.seconds) + " s)");
  return arm;
}

const ArmResult& ForgettingResult::arm(const std::string& name) const {
  for (const auto& a : arms) {
    if (a.name == name) return a;
  }
  throw ConfigError("no experiment arm named '" + name + "'");
}

ForgettingResult run_forgetting_experiment(const ForgettingConfig& config, const Logger& log) {
  config.model.validate();
  ForgettingResult r;
  r.general = make_domain_data(synthetic::Domain::kGeneral, config.general_docs, config.eval_docs, config.data_seed,
                               config.window);
  r.target = make_domain_data(config.target, config.target_docs, config.eval_docs, config.data_seed + 1, config.window);
  say(log, "general: " + std::to_string(r.general.train.size()) + " train / " + std::to_string(r.general.eval.size()) +
               " eval segments; target: " + std::to_string(r.target.train.size()) + " / " +
               std::to_string(r.target.eval.size()));

  r.pretrained = pretrain_model(config.model, r.general.train, r.general.eval, config.pretrain, log);

  const Corpus probe = segment_corpus(synthetic::general_probe(config.probe_docs, config.data_seed + 2), config.window);
  r.report = layer_importance(r.pretrained.model, probe, config.method);
  r.adept_plan = select_layers(r.report, config.k);
  r.uniform_plan = plan_uniform(config.model.n_layers, config.k, ExpansionStrategy::kUniform);
  say(log, "importance-guided plan " + r.adept_plan.display_name() + ", uniform plan " + r.uniform_plan.display_name());

  const Model& base = r.pretrained.model;
  r.arms.push_back(run_arm("full", base, TrainMode::kFull, {}, r.general, r.target, config.cpt, log));
  r.arms.push_back(run_arm("uniform_expand", base, TrainMode::kUniformExpand, r.uniform_plan, r.general, r.target,
                           config.cpt, log));
  r.arms.push_back(run_arm("adept", base, TrainMode::kAdept, r.adept_plan, r.general, r.target, config.cpt, log));
  return r;
}

nlohmann::json summarize(const ForgettingResult& r) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : r.arms) {
    arms.push_back({{"name", a.name},
                    {"mode", mode_name(a.mode)},
                    {"plan", a.plan.k > 0 ? a.plan.display_name() : "none"},
                    {"general_before", a.general_before},
                    {"general_after", a.general_after},
                    {"general_increase", a.general_increase()},
                    {"target_before", a.target_before},
                    {"target_after", a.target_after},
                    {"target_decrease", a.target_decrease()},
                    {"trainable_parameters", a.model.trainable_parameter_count()},
                    {"seconds", a.seconds}});
  }
  return {{"kind", "forgetting_experiment"},
          {"pretrain_heldout_curve", r.pretrained.heldout_curve},
          {"layer_importance", to_json(r.report)},
          {"arms", arms}};
}

std::vector<SweepRow> sweep_k(const Model& base, const LayerImportanceReport& report, std::span<const std::size_t> ks,
                              const DomainData& general, const DomainData& target, const TrainConfig& tc,
                              const Logger& log) {
  if (ks.empty()) throw ConfigError("sweep needs at least one k");
  std::vector<SweepRow> rows;
  for (auto k : ks) {
    const ExpansionPlan plan = select_layers(report, k);
    const ArmResult arm = run_arm("k=" + std::to_string(k), base, TrainMode::kAdept, plan, general, target, tc, log);
    rows.push_back({k, plan.display_name(), arm.general_after, arm.target_after, arm.model.trainable_parameter_count()});
  }
  return rows;
}

nlohmann::json to_json(const SweepRow& row) {
  return {{"k", row.k},
          {"plan", row.plan_name},
          {"general_loss", row.general_loss},
          {"target_loss", row.target_loss},
          {"trainable_parameters", row.trainable_parameters}};
}

}  // namespace adept
