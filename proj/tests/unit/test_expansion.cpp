// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "adept/error.hpp"
#include "adept/expansion.hpp"
#include "adept/trainer.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

namespace adept {
namespace {

using testing::random_corpus;
using testing::tiny_model;

LayerImportanceReport report_of(const std::vector<double>& scores) {
  LayerImportanceReport r;
  for (std::size_t l = 0; l < scores.size(); ++l) r.per_layer.push_back({l, scores[l]});
  return r;
}

std::vector<std::size_t> sources(std::size_t n, std::size_t k, ExpansionStrategy s, std::size_t span = 0) {
  return plan_uniform(n, k, s, span).source_layers;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(SelectLayers, PicksLowestScores) {
  const auto plan = select_layers(report_of({0.5, 0.1, 0.9, 0.2}), 2);
  EXPECT_EQ(plan.source_layers, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(plan.insertion_positions, (std::vector<std::size_t>{2, 5}));
  EXPECT_EQ(plan.display_name(), "Masking Out (1,3)");
  EXPECT_FALSE(plan.report_hash.empty());
}

TEST(SelectLayers, AllLayersAndRange) {
  EXPECT_EQ(select_layers(report_of({3, 1, 2}), 3).source_layers, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_THROW(select_layers(report_of({3, 1, 2}), 0), ConfigError);
  EXPECT_THROW(select_layers(report_of({3, 1, 2}), 4), ConfigError);
}

TEST(SelectLayers, TiesGoToLowerIndex) {
  EXPECT_EQ(select_layers(report_of({1, 0, 1, 0, 1}), 3).source_layers, (std::vector<std::size_t>{0, 1, 3}));
}

TEST(SelectLayers, MatchesExhaustiveSearch) {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.index(7);
    std::vector<double> s(n);
    for (auto& v : s) v = trial % 2 ? rng.normal() : static_cast<double>(rng.index(3));
    for (std::size_t k = 1; k <= n; ++k) {
      EXPECT_EQ(select_layers(report_of(s), k).source_layers, oracle::best_subset(s, k));
    }
  }
}

TEST(PlanUniform, WholeDepth) {
  EXPECT_EQ(sources(28, 4, ExpansionStrategy::kUniform), (std::vector<std::size_t>{6, 13, 20, 27}));
  EXPECT_EQ(plan_uniform(28, 4, ExpansionStrategy::kUniform).display_name(), "Uniform (6,13,20,27)");
  EXPECT_EQ(sources(6, 2, ExpansionStrategy::kUniform), (std::vector<std::size_t>{2, 5}));
}

TEST(PlanUniform, HalfVariants) {
  EXPECT_EQ(sources(28, 4, ExpansionStrategy::kUniformLastHalf, 16), (std::vector<std::size_t>{15, 19, 23, 27}));
  EXPECT_EQ(sources(28, 4, ExpansionStrategy::kUniformFirstHalf, 16), (std::vector<std::size_t>{3, 7, 11, 15}));
  EXPECT_EQ(sources(28, 4, ExpansionStrategy::kUniformLastHalf), (std::vector<std::size_t>{16, 20, 23, 27}));
  EXPECT_EQ(sources(28, 4, ExpansionStrategy::kUniformFirstHalf), (std::vector<std::size_t>{2, 6, 9, 13}));
}

TEST(PlanUniform, SingleSourceAtSpanEnd) {
  EXPECT_EQ(sources(28, 1, ExpansionStrategy::kUniform), (std::vector<std::size_t>{27}));
  EXPECT_EQ(sources(28, 1, ExpansionStrategy::kUniformFirstHalf), (std::vector<std::size_t>{13}));
  EXPECT_EQ(sources(7, 1, ExpansionStrategy::kUniformLastHalf), (std::vector<std::size_t>{6}));
}

TEST(PlanUniform, Errors) {
  EXPECT_THROW(plan_uniform(6, 4, ExpansionStrategy::kUniformFirstHalf), ConfigError);
  EXPECT_THROW(plan_uniform(6, 0, ExpansionStrategy::kUniform), ConfigError);
  EXPECT_THROW(plan_uniform(6, 2, ExpansionStrategy::kUniform, 7), ConfigError);
  EXPECT_THROW(plan_uniform(6, 2, ExpansionStrategy::kImportanceGuided), ConfigError);
}

TEST(PlanUniform, SourcesAreValidForEveryShape) {
  for (std::size_t n = 1; n <= 32; ++n) {
    for (auto s : {ExpansionStrategy::kUniform, ExpansionStrategy::kUniformFirstHalf, ExpansionStrategy::kUniformLastHalf}) {
      const std::size_t span = s == ExpansionStrategy::kUniform ? n : (n + 1) / 2;
      for (std::size_t k = 1; k <= span; ++k) EXPECT_NO_THROW(plan_uniform(n, k, s).validate());
    }
  }
}

TEST(Expand, FunctionPreservingBitwise) {
  const Model m0 = tiny_model(4, 3);
  const auto plan = plan_uniform(4, 2, ExpansionStrategy::kUniform);
  const Model m1 = expand(m0, plan);
  EXPECT_EQ(m1.layers.size(), 6u);
  EXPECT_EQ(m1.config.n_layers, 6u);
  EXPECT_EQ(verify_function_preserving(m0, m1, 30, 1), 0.0);
  Rng rng(2);
  const auto toks = testing::random_tokens(rng, 16, 64);
  EXPECT_TRUE(forward_logits(m0, toks) == forward_logits(m1, toks));
}

TEST(Expand, LayoutFreezingAndTrainableCount) {
  const Model m0 = tiny_model(4, 3);
  const auto plan = select_layers(report_of({0.3, 0.1, 0.2, 0.4}), 2);
  const Model m1 = expand(m0, plan);
  EXPECT_EQ(expanded_sources(m1), (std::vector<std::size_t>{1, 2}));
  for (std::size_t i = 0; i < m1.layers.size(); ++i) {
    const auto& l = m1.layers[i];
    EXPECT_EQ(l.is_expanded(), i == 2 || i == 4);
    EXPECT_EQ(l.frozen(), !l.is_expanded());
    if (i > 0 && l.is_expanded()) EXPECT_FALSE(m1.layers[i - 1].is_expanded());
  }
  EXPECT_TRUE(m1.shared_frozen());
  EXPECT_EQ(m1.trainable_parameter_count(), 2 * m0.layers[0].parameter_count());
  const auto& copy = m1.layers[2];
  EXPECT_TRUE(copy.unit(Unit::kQProj) == m0.layers[1].unit(Unit::kQProj));
  for (double v : copy.unit(Unit::kOProj).data()) EXPECT_EQ(v, 0.0);
  for (double v : copy.unit(Unit::kDownProj).data()) EXPECT_EQ(v, 0.0);
}

TEST(Expand, ZeroPlanAndMismatches) {
  const Model m0 = tiny_model(3);
  ExpansionPlan none;
  EXPECT_TRUE(expand(m0, none) == m0);
  EXPECT_THROW(expand(m0, plan_uniform(4, 1, ExpansionStrategy::kUniform)), InvariantError);
  const Model m1 = expand(m0, plan_uniform(3, 1, ExpansionStrategy::kUniform));
  EXPECT_THROW(expand(m1, plan_uniform(4, 1, ExpansionStrategy::kUniform)), InvariantError);
  ExpansionPlan bad = plan_uniform(3, 2, ExpansionStrategy::kUniform);
  bad.source_layers = {2, 1};
  EXPECT_THROW(bad.validate(), InvariantError);
}

TEST(Expand, TrainingTheCopiesBreaksPreservation) {
  const Model m0 = tiny_model(3, 5);
  Model m1 = expand(m0, plan_uniform(3, 1, ExpansionStrategy::kUniform));
  const auto corpus = random_corpus(2, 12, 64, 3);
  std::vector<const Document*> batch{&corpus.documents[0], &corpus.documents[1]};
  TrainConfig tc{.lr_base = 0.1, .warmup_ratio = 0.0, .schedule = Schedule::kConstant, .total_steps = 1};
  train_step(m1, batch, uniform_assignment(m1), 0, tc);
  EXPECT_GT(verify_function_preserving(m0, m1, 10, 2), 0.0);
  for (std::size_t l = 0; l < 3; ++l) EXPECT_TRUE(m1.layers[l].unit(Unit::kQProj) == m0.layers[l].unit(Unit::kQProj));
}

TEST(Expand, OutputPerturbationIsFirstOrder) {
  // A perturbation delta of the copy's o_proj moves the logits by J(delta);
  // the linearisation, measured at a tiny scale, predicts the change at 1e-3.
  const Model m0 = tiny_model(3, 6);
  const Model m1 = expand(m0, plan_uniform(3, 1, ExpansionStrategy::kUniform));
  Rng rng(4);
  const auto toks = testing::random_tokens(rng, 12, 64);
  Tensor direction(unit_shape(m1.config, Unit::kOProj));
  for (auto& v : direction.data()) v = rng.normal();
  auto perturbed = [&](double eps) {
    Model m = m1;
    Tensor& o = m.layers[3].unit(Unit::kOProj);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += eps * direction[i];
    return forward_logits(m, toks);
  };
  const Tensor base = forward_logits(m1, toks);
  const Tensor tiny = perturbed(1e-7);
  const Tensor step = perturbed(1e-3);
  double first_order = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) first_order = std::max(first_order, std::abs(tiny[i] - base[i]) * 1e4);
  const double measured = max_abs_diff(step, base);
  EXPECT_GT(measured, 0.0);
  EXPECT_GT(measured, 0.9 * first_order);
  EXPECT_LT(measured, 1.1 * first_order);
}

TEST(ExpansionPlan, JsonRoundTrip) {
  const auto plan = select_layers(report_of({0.3, 0.1, 0.2, 0.4}), 2);
  EXPECT_EQ(plan_from_json(to_json(plan)), plan);
  const auto u = plan_uniform(8, 3, ExpansionStrategy::kUniformLastHalf);
  EXPECT_EQ(plan_from_json(to_json(u)), u);
  EXPECT_THROW(plan_from_json(nlohmann::json{{"k", "x"}}), ConfigError);
}

}  // namespace
}  // namespace adept
