// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/trainer.hpp"

#include <cmath>
#include <numbers>

#include "adept/checkpoint.hpp"
#include "adept/error.hpp"
#include "adept/evaluation.hpp"
#include "adept/random.hpp"

namespace adept {

std::string_view mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::kAdept: return "adept";
    case TrainMode::kFull: return "full";
    case TrainMode::kUniformExpand: return "uniform_expand";
    case TrainMode::kExpandNoDecouple: return "expand_no_decouple";
  }
  return "?";
}

TrainMode parse_mode(std::string_view name) {
  for (auto m : {TrainMode::kAdept, TrainMode::kFull, TrainMode::kUniformExpand, TrainMode::kExpandNoDecouple}) {
    if (mode_name(m) == name) return m;
  }
  throw ConfigError("unknown training mode '" + std::string(name) + "'");
}

std::string_view schedule_name(Schedule s) { return s == Schedule::kCosine ? "cosine" : "constant"; }

Schedule parse_schedule(std::string_view name) {
  if (name == "cosine") return Schedule::kCosine;
  if (name == "constant") return Schedule::kConstant;
  throw ConfigError("unknown schedule '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  std::string bad;
  if (!(lr_base > 0.0) || !std::isfinite(lr_base)) bad += " lr_base must be > 0;";
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) bad += " warmup_ratio must lie in [0, 1);";
  if (batch_size < 1) bad += " batch_size must be >= 1;";
  if (total_steps < 1) bad += " total_steps must be >= 1;";
  if (recompute_interval < 1) bad += " recompute_interval must be >= 1;";
  if (!(clip_norm >= 0.0)) bad += " clip_norm must be >= 0;";
  if (!bad.empty()) throw ConfigError("invalid train config:" + bad);
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr_base", c.lr_base},
          {"warmup_ratio", c.warmup_ratio},
          {"schedule", schedule_name(c.schedule)},
          {"batch_size", c.batch_size},
          {"total_steps", c.total_steps},
          {"recompute_interval", c.recompute_interval},
          {"seed", c.seed},
          {"mode", mode_name(c.mode)},
          {"normalization_mode", normalization_name(c.normalization_mode)},
          {"clip_norm", c.clip_norm},
          {"eval_interval", c.eval_interval}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.lr_base = j.value("lr_base", c.lr_base);
    c.warmup_ratio = j.value("warmup_ratio", c.warmup_ratio);
    if (j.contains("schedule")) c.schedule = parse_schedule(j.at("schedule").get<std::string>());
    c.batch_size = j.value("batch_size", c.batch_size);
    c.total_steps = j.value("total_steps", c.total_steps);
    c.recompute_interval = j.value("recompute_interval", c.recompute_interval);
    c.seed = j.value("seed", c.seed);
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("normalization_mode")) {
      c.normalization_mode = parse_normalization(j.at("normalization_mode").get<std::string>());
    }
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.eval_interval = j.value("eval_interval", c.eval_interval);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
  c.validate();
  return c;
}

double LrAssignment::multiplier(std::size_t layer, Unit unit) const {
  auto it = per_unit.find({layer, unit});
  if (it == per_unit.end()) {
    throw InvariantError("no learning-rate multiplier for layer " + std::to_string(layer) + " unit " +
                         std::string(unit_name(unit)));
  }
  return it->second;
}

std::string LrAssignment::hash() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [key, m] : per_unit) j.push_back({key.first, unit_name(key.second), m});
  return hash_hex(fnv1a64(j.dump()));
}

LrAssignment assign_unit_lrs(const UnitImportanceReport& report) {
  LrAssignment a;
  a.step_computed = report.computed_at_step;
  for (const auto& s : report.per_unit) {
    if (!(s.normalized >= 0.0 && s.normalized <= 1.0)) {
      throw InvariantError("normalized importance " + std::to_string(s.normalized) + " outside [0, 1]");
    }
    a.per_unit[{s.layer, s.unit}] = 2.0 * (1.0 - s.normalized);
  }
  return a;
}

LrAssignment assign_unit_lrs(const UnitImportanceReport& report, const Model& model) {
  LrAssignment a = assign_unit_lrs(report);
  std::string missing;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].frozen()) continue;
    for (Unit u : kAllUnits) {
      if (!a.per_unit.contains({l, u})) missing += " " + std::to_string(l) + "." + std::string(unit_name(u));
    }
  }
  if (!missing.empty()) throw ConfigError("importance report lacks trainable units:" + missing);
  return a;
}

LrAssignment uniform_assignment(const Model& model, std::size_t step) {
  LrAssignment a;
  a.step_computed = step;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].frozen()) continue;
    for (Unit u : kAllUnits) a.per_unit[{l, u}] = 1.0;
  }
  return a;
}

double schedule_lr(std::size_t step, const TrainConfig& config) {
  const auto warmup = static_cast<std::size_t>(std::ceil(config.warmup_ratio * static_cast<double>(config.total_steps)));
  if (step < warmup) return static_cast<double>(step) / static_cast<double>(warmup);
  if (config.schedule == Schedule::kConstant) return 1.0;
  const double decay_len = static_cast<double>(config.total_steps - warmup);
  if (decay_len <= 0.0) return 1.0;
  const double progress = static_cast<double>(step - warmup) / decay_len;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double effective_lr(std::size_t step, const TrainConfig& config, const LrAssignment& a, std::size_t layer, Unit unit) {
  return schedule_lr(step, config) * a.multiplier(layer, unit) * config.lr_base;
}

BatchCursor::BatchCursor(std::size_t n_docs, std::size_t batch_size, std::uint64_t seed)
    : n_docs_(n_docs), batch_size_(batch_size), seed_(seed) {
  if (n_docs == 0) throw ConfigError("training corpus is empty");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  reshuffle();
}

void BatchCursor::reshuffle() {
  order_.resize(n_docs_);
  for (std::size_t i = 0; i < n_docs_; ++i) order_[i] = i;
  Rng rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (epoch_ + 1)));
  for (std::size_t i = n_docs_; i > 1; --i) std::swap(order_[i - 1], order_[rng.index(i)]);
  pos_ = 0;
}

std::vector<std::size_t> BatchCursor::peek() const {
  BatchCursor copy = *this;
  return copy.next();
}

std::vector<std::size_t> BatchCursor::next() {
  std::vector<std::size_t> out;
  while (out.size() < batch_size_) {
    if (pos_ == order_.size()) {
      ++epoch_;
      reshuffle();
    }
    out.push_back(order_[pos_++]);
  }
  return out;
}

double train_step(Model& model, std::span<const Document* const> batch, const LrAssignment& assignment,
                  std::size_t step, const TrainConfig& config) {
  if (step >= config.total_steps) {
    throw ConfigError("step " + std::to_string(step) + " outside [0, " + std::to_string(config.total_steps) + ")");
  }
  model.zero_grad();
  double loss = 0.0;
  try {
    loss = accumulate_mean_loss_gradient(model, batch);
  } catch (const NumericError& e) {
    model.zero_grad();
    throw NumericError(std::string("step ") + std::to_string(step) + " aborted: " + e.what());
  }
  if (!std::isfinite(loss)) {
    model.zero_grad();
    throw NumericError("step " + std::to_string(step) + " aborted: non-finite loss");
  }
  double sq = 0.0;
  for (const Tensor* t : std::as_const(model).tensors()) {
    if (!t->requires_grad()) continue;
    for (double g : t->grad()) sq += g * g;
  }
  if (!std::isfinite(sq)) {
    model.zero_grad();
    throw NumericError("step " + std::to_string(step) + " aborted: non-finite gradient");
  }
  const double clip = config.clip_norm > 0.0 && std::sqrt(sq) > config.clip_norm ? config.clip_norm / std::sqrt(sq) : 1.0;
  const double base = schedule_lr(step, config) * config.lr_base;

  auto apply = [&](Tensor& t, double lr) {
    if (!t.requires_grad()) return;
    auto d = t.data();
    auto g = t.grad();
    if (clip == 1.0) {
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= lr * g[i];
    } else {
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= lr * (clip * g[i]);
    }
  };
  // Resolve every multiplier before touching parameters so a missing entry
  // leaves the model unchanged.
  std::vector<std::array<double, kNumUnits>> mult(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].frozen()) continue;
    for (Unit u : kAllUnits) mult[l][static_cast<std::size_t>(u)] = assignment.multiplier(l, u);
  }
  apply(model.token_embedding, base);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].frozen()) continue;
    for (Unit u : kAllUnits) apply(model.layers[l].unit(u), base * mult[l][static_cast<std::size_t>(u)]);
  }
  apply(model.final_norm, base);
  if (model.lm_head.size() > 0) apply(model.lm_head, base);
  model.zero_grad();
  return loss;
}

TrainResult train_cpt(Model& model, const Corpus& corpus, const TrainConfig& config, const Corpus* general_eval,
                      const Corpus* target_eval, const std::function<void(const nlohmann::json&)>& on_step) {
  config.validate();
  const bool expanded_mode = config.mode != TrainMode::kFull;
  if (expanded_mode && model.n_expanded() == 0) {
    throw ConfigError(std::string("mode ") + std::string(mode_name(config.mode)) + " needs an expanded model");
  }
  if (!expanded_mode) {
    if (model.n_expanded() != 0) throw ConfigError("mode full expects an un-expanded model");
    if (model.trainable_parameter_count() != model.parameter_count()) {
      throw ConfigError("mode full expects every parameter to be trainable");
    }
  }
  std::vector<std::size_t> expanded;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].is_expanded()) expanded.push_back(l);
  }

  TrainResult result;
  BatchCursor cursor(corpus.size(), config.batch_size, config.seed);
  LrAssignment assignment;
  for (std::size_t step = 0; step < config.total_steps; ++step) {
    const auto ids = cursor.next();
    std::vector<const Document*> batch;
    for (auto i : ids) batch.push_back(&corpus.documents[i]);

    if (step % config.recompute_interval == 0) {
      if (config.mode == TrainMode::kAdept) {
        Corpus sample;
        sample.kind = corpus.kind;
        sample.language_tag = corpus.language_tag;
        for (const Document* d : batch) sample.documents.push_back(*d);
        auto report = unit_importance(model, sample, expanded, config.normalization_mode, step);
        assignment = assign_unit_lrs(report, model);
        result.unit_reports.push_back(std::move(report));
      } else {
        assignment = uniform_assignment(model, step);
      }
      result.assignments.push_back(assignment);
    }

    nlohmann::json m;
    m["step"] = step;
    m["lr_factor"] = schedule_lr(step, config);
    m["assignment_hash"] = assignment.hash();
    m["loss"] = train_step(model, batch, assignment, step, config);
    const bool last = step + 1 == config.total_steps;
    const bool eval_now = last || (config.eval_interval > 0 && (step + 1) % config.eval_interval == 0);
    if (eval_now && general_eval) m["general_heldout_loss"] = heldout_loss(model, *general_eval);
    if (eval_now && target_eval) m["target_heldout_loss"] = heldout_loss(model, *target_eval);
    if (on_step) on_step(m);
    result.metrics.push_back(std::move(m));
  }
  return result;
}

}  // namespace adept
