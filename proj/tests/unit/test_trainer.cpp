// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "adept/error.hpp"
#include "adept/expansion.hpp"
#include "adept/importance.hpp"
#include "adept/trainer.hpp"
#include "test_util.hpp"

namespace adept {
namespace {

using testing::random_corpus;
using testing::tiny_model;

UnitImportanceReport report_with(std::size_t layer, const std::vector<double>& normalized) {
  UnitImportanceReport r;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    UnitScore s;
    s.layer = layer;
    s.unit = kAllUnits[i];
    s.normalized = normalized[i];
    s.size = 1;
    r.per_unit.push_back(s);
  }
  return r;
}

std::vector<const Document*> batch_of(const Corpus& c) {
  std::vector<const Document*> b;
  for (const auto& d : c.documents) b.push_back(&d);
  return b;
}

TrainConfig constant_config(double lr, std::size_t steps = 10) {
  return TrainConfig{.lr_base = lr, .warmup_ratio = 0.0, .schedule = Schedule::kConstant, .batch_size = 2,
                     .total_steps = steps, .recompute_interval = 1000, .seed = 3, .mode = TrainMode::kFull};
}

TEST(AssignUnitLrs, EndpointsAndMidpoint) {
  const auto a = assign_unit_lrs(report_with(2, {0.0, 0.5, 1.0}));
  EXPECT_EQ(a.multiplier(2, Unit::kQProj), 2.0);
  EXPECT_EQ(a.multiplier(2, Unit::kKProj), 1.0);
  EXPECT_EQ(a.multiplier(2, Unit::kVProj), 0.0);
  EXPECT_THROW(a.multiplier(2, Unit::kOProj), InvariantError);
}

TEST(AssignUnitLrs, MissingTrainableUnitsAreListed) {
  Model m = expand(tiny_model(2), plan_uniform(2, 1, ExpansionStrategy::kUniform));
  try {
    assign_unit_lrs(report_with(2, {0.5, 0.5}), m);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("v_proj"), std::string::npos);
  }
}

TEST(AssignUnitLrs, BudgetExactMeanMultiplierIsOne) {
  const Model m0 = tiny_model(3, 2);
  Model m = expand(m0, plan_uniform(3, 2, ExpansionStrategy::kUniform));
  // Break the symmetry of the zero-initialised output projections.
  Rng rng(1);
  for (auto& l : m.layers) {
    if (!l.is_expanded()) continue;
    for (auto& v : l.unit(Unit::kOProj).data()) v = 0.1 * rng.normal();
  }
  const auto corpus = random_corpus(4, 12, 64, 8);
  std::vector<std::size_t> expanded;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    if (m.layers[l].is_expanded()) expanded.push_back(l);
  }
  const auto report = unit_importance(m, corpus, expanded, NormalizationMode::kBudgetExact);
  const auto a = assign_unit_lrs(report, m);
  double num = 0.0, den = 0.0;
  for (const auto& s : report.per_unit) {
    num += a.multiplier(s.layer, s.unit) * static_cast<double>(s.size);
    den += static_cast<double>(s.size);
  }
  EXPECT_NEAR(num / den, 1.0, 1e-9);
}

TEST(ScheduleLr, WarmupAndCosine) {
  TrainConfig c{.warmup_ratio = 0.1, .total_steps = 100};
  EXPECT_EQ(schedule_lr(0, c), 0.0);
  EXPECT_EQ(schedule_lr(5, c), 0.5);
  EXPECT_EQ(schedule_lr(10, c), 1.0);
  EXPECT_NEAR(schedule_lr(55, c), 0.5, 1e-12);
  EXPECT_NEAR(schedule_lr(40, c), 0.5 * (1 + std::cos(std::numbers::pi * 30.0 / 90.0)), 1e-15);
  c.schedule = Schedule::kConstant;
  EXPECT_EQ(schedule_lr(99, c), 1.0);
  c.warmup_ratio = 0.0;
  EXPECT_EQ(schedule_lr(0, c), 1.0);
}

TEST(EffectiveLr, ComposesFactors) {
  TrainConfig c{.lr_base = 0.01, .warmup_ratio = 0.0, .schedule = Schedule::kConstant, .total_steps = 10};
  const auto a = assign_unit_lrs(report_with(0, {0.25}));
  EXPECT_DOUBLE_EQ(effective_lr(3, c, a, 0, Unit::kQProj), 0.015);
}

TEST(TrainConfig, ValidatesAndRoundTrips) {
  TrainConfig bad{.lr_base = 0.0, .batch_size = 0};
  EXPECT_THROW(bad.validate(), ConfigError);
  TrainConfig c{.lr_base = 0.2, .mode = TrainMode::kUniformExpand, .normalization_mode = NormalizationMode::kBudgetExact};
  const auto back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(train_config_from_json(nlohmann::json::object()).total_steps, TrainConfig{}.total_steps);
}

TEST(BatchCursor, EpochIsAPermutation) {
  BatchCursor cur(10, 3, 5);
  std::multiset<std::size_t> seen;
  for (int i = 0; i < 10; ++i) {
    const auto peeked = cur.peek();
    const auto got = cur.next();
    EXPECT_EQ(peeked, got);
    seen.insert(got.begin(), got.end());
  }
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(seen.count(i), 3u);
  EXPECT_THROW(BatchCursor(0, 1, 0), ConfigError);
}

TEST(TrainStep, ZeroMultiplierLeavesUnitUntouched) {
  Model m = expand(tiny_model(2, 1), plan_uniform(2, 1, ExpansionStrategy::kUniform));
  const Model before = m;
  auto a = uniform_assignment(m);
  a.per_unit[{2, Unit::kQProj}] = 0.0;
  const auto corpus = random_corpus(2, 10, 64, 2);
  train_step(m, batch_of(corpus), a, 0, constant_config(0.5, 1));
  EXPECT_TRUE(m.layers[2].unit(Unit::kQProj) == before.layers[2].unit(Unit::kQProj));
  EXPECT_FALSE(m.layers[2].unit(Unit::kOProj) == before.layers[2].unit(Unit::kOProj));
}

TEST(TrainStep, MatchesHandSgd) {
  Model m = expand(tiny_model(2, 1), plan_uniform(2, 1, ExpansionStrategy::kUniform));
  const auto corpus = random_corpus(3, 10, 64, 4);
  auto a = uniform_assignment(m);
  a.per_unit[{2, Unit::kUpProj}] = 0.25;

  Model ref = m;
  ref.zero_grad();
  accumulate_mean_loss_gradient(ref, corpus);
  const Tensor& up = ref.layers[2].unit(Unit::kUpProj);
  const Tensor& down = ref.layers[2].unit(Unit::kDownProj);

  const auto tc = constant_config(0.3, 1);
  train_step(m, batch_of(corpus), a, 0, tc);
  for (std::size_t i = 0; i < up.size(); ++i) {
    EXPECT_DOUBLE_EQ(m.layers[2].unit(Unit::kUpProj)[i], up[i] - 0.3 * 0.25 * up.grad()[i]);
  }
  for (std::size_t i = 0; i < down.size(); ++i) {
    EXPECT_DOUBLE_EQ(m.layers[2].unit(Unit::kDownProj)[i], down[i] - 0.3 * down.grad()[i]);
  }
  for (const Tensor* t : std::as_const(m).tensors()) {
    for (double g : t->grad()) EXPECT_EQ(g, 0.0);
  }
}

TEST(TrainStep, DescendsOnTheBatch) {
  Model m = tiny_model(2, 3);
  const auto corpus = random_corpus(2, 12, 64, 6);
  const auto a = uniform_assignment(m);
  const auto tc = constant_config(0.01, 20);
  double prev = train_step(m, batch_of(corpus), a, 0, tc);
  for (std::size_t s = 1; s < 20; ++s) {
    const double loss = train_step(m, batch_of(corpus), a, s, tc);
    EXPECT_LT(loss, prev);
    prev = loss;
  }
}

TEST(TrainStep, NonFiniteAbortsWithoutUpdate) {
  Model m = tiny_model(2, 3);
  m.final_norm[0] = std::numeric_limits<double>::quiet_NaN();
  const Model before = m;
  const auto corpus = random_corpus(2, 8, 64, 6);
  EXPECT_THROW(train_step(m, batch_of(corpus), uniform_assignment(m), 0, constant_config(0.1, 1)), NumericError);
  for (std::size_t l = 0; l < 2; ++l) EXPECT_TRUE(m.layers[l] == before.layers[l]);
  EXPECT_THROW(train_step(m, batch_of(corpus), uniform_assignment(m), 1, constant_config(0.1, 1)), ConfigError);
}

TEST(TrainStep, ClipBoundsTheUpdate) {
  Model m = tiny_model(2, 3);
  const Model before = m;
  const auto corpus = random_corpus(2, 8, 64, 6);
  auto tc = constant_config(1.0, 1);
  tc.clip_norm = 1e-3;
  train_step(m, batch_of(corpus), uniform_assignment(m), 0, tc);
  double sq = 0.0;
  const auto a = std::as_const(m).tensors();
  const auto b = before.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t]->size(); ++i) sq += std::pow((*a[t])[i] - (*b[t])[i], 2);
  }
  EXPECT_NEAR(std::sqrt(sq), 1e-3, 1e-12);
}

TEST(TrainCpt, FullModeEqualsReferenceLoop) {
  const Model m0 = tiny_model(2, 5);
  const auto corpus = random_corpus(6, 10, 64, 9);
  auto tc = constant_config(0.1, 7);
  tc.schedule = Schedule::kCosine;
  tc.warmup_ratio = 0.2;

  Model trained = m0;
  const auto result = train_cpt(trained, corpus, tc);
  ASSERT_EQ(result.metrics.size(), 7u);

  Model ref = m0;
  BatchCursor cursor(corpus.size(), tc.batch_size, tc.seed);
  for (std::size_t step = 0; step < 7; ++step) {
    std::vector<const Document*> batch;
    for (auto i : cursor.next()) batch.push_back(&corpus.documents[i]);
    ref.zero_grad();
    const double loss = accumulate_mean_loss_gradient(ref, batch);
    EXPECT_EQ(result.metrics[step]["loss"].get<double>(), loss);
    const double lr = schedule_lr(step, tc) * tc.lr_base;
    for (Tensor* t : ref.tensors()) {
      for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] -= lr * t->grad()[i];
    }
  }
  EXPECT_TRUE(trained == ref);
}

TEST(TrainCpt, SingleRecomputeWhenIntervalExceedsSteps) {
  Model m = expand(tiny_model(2, 5), plan_uniform(2, 1, ExpansionStrategy::kUniform));
  const auto corpus = random_corpus(4, 10, 64, 9);
  auto tc = constant_config(0.1, 5);
  tc.mode = TrainMode::kAdept;
  tc.recompute_interval = 6;
  const auto r = train_cpt(m, corpus, tc);
  EXPECT_EQ(r.assignments.size(), 1u);
  EXPECT_EQ(r.unit_reports.size(), 1u);
  tc.recompute_interval = 2;
  Model m2 = expand(tiny_model(2, 5), plan_uniform(2, 1, ExpansionStrategy::kUniform));
  EXPECT_EQ(train_cpt(m2, corpus, tc).assignments.size(), 3u);
}

TEST(TrainCpt, AdeptLeavesOriginalsAndSharedTensorsBitIdentical) {
  const Model m0 = tiny_model(3, 5);
  Model m = expand(m0, plan_uniform(3, 2, ExpansionStrategy::kUniform));
  const auto corpus = random_corpus(4, 10, 64, 9);
  auto tc = constant_config(0.2, 6);
  tc.mode = TrainMode::kAdept;
  tc.recompute_interval = 2;
  const auto eval = random_corpus(2, 10, 64, 10);
  const auto r = train_cpt(m, corpus, tc, &eval, &eval);
  EXPECT_TRUE(r.metrics.back().contains("general_heldout_loss"));
  std::size_t orig = 0;
  for (const auto& l : m.layers) {
    if (!l.is_expanded()) {
      Layer expected = m0.layers[orig++];
      expected.set_frozen(true);
      EXPECT_TRUE(l == expected);
    }
  }
  EXPECT_TRUE(m.token_embedding == m0.token_embedding);
  EXPECT_TRUE(m.final_norm == m0.final_norm);
  EXPECT_GT(verify_function_preserving(m0, m, 4), 0.0);
}

TEST(TrainCpt, ModePairing) {
  const auto corpus = random_corpus(2, 10, 64, 9);
  Model plain = tiny_model(2);
  auto tc = constant_config(0.1, 1);
  tc.mode = TrainMode::kAdept;
  EXPECT_THROW(train_cpt(plain, corpus, tc), ConfigError);
  Model expanded = expand(plain, plan_uniform(2, 1, ExpansionStrategy::kUniform));
  tc.mode = TrainMode::kFull;
  EXPECT_THROW(train_cpt(expanded, corpus, tc), ConfigError);
  plain.layers[0].set_frozen(true);
  EXPECT_THROW(train_cpt(plain, corpus, tc), ConfigError);
}

TEST(LrAssignment, HashTracksContent) {
  const auto a = assign_unit_lrs(report_with(0, {0.1, 0.2}));
  auto b = a;
  EXPECT_EQ(a.hash(), b.hash());
  b.per_unit[{0, Unit::kQProj}] = 1.0;
  EXPECT_NE(a.hash(), b.hash());
}

}  // namespace
}  // namespace adept
