// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "adept/analysis.hpp"
#include "adept/error.hpp"
#include "adept/expansion.hpp"
#include "adept/graph.hpp"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

namespace adept {
namespace {

using testing::random_corpus;
using testing::tiny_model;

// ---- token shift ----

TEST(TokenShift, Categories) {
  EXPECT_EQ(categorize(1), ShiftCategory::kUnshifted);
  EXPECT_EQ(categorize(2), ShiftCategory::kMarginal);
  EXPECT_EQ(categorize(3), ShiftCategory::kMarginal);
  EXPECT_EQ(categorize(4), ShiftCategory::kShifted);
  EXPECT_THROW(categorize(0), InvariantError);
}

TEST(TokenShift, RankBreaksTiesByLowerId) {
  const std::vector<double> z{1.0, 3.0, 3.0, 0.5};
  EXPECT_EQ(greedy_token(z), 1);
  EXPECT_EQ(token_rank(z, 1), 1u);
  EXPECT_EQ(token_rank(z, 2), 2u);
  EXPECT_EQ(token_rank(z, 0), 3u);
  EXPECT_EQ(token_rank(z, 3), 4u);
  EXPECT_THROW(token_rank(z, 4), ConfigError);
}

TEST(TokenShift, HandBuiltTables) {
  // Tuned greedy is token 0 at both positions; base ranks it 2nd, then 5th.
  Tensor base({2, 6}, {0.5, 0.9, 0.1, 0.2, 0.3, 0.0,   //
                       0.1, 0.9, 0.8, 0.7, 0.6, 0.0});
  Tensor tuned({2, 6}, {2.0, 0.0, 0.0, 0.0, 0.0, 0.0,  //
                        2.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  TokenShiftAccumulator acc;
  acc.add(base, tuned);
  const auto r = acc.report();
  EXPECT_EQ(r.total, 2u);
  EXPECT_EQ(r.counts[1], 1u);
  EXPECT_EQ(r.counts[2], 1u);
  EXPECT_EQ(r.fraction(ShiftCategory::kMarginal), 0.5);
  EXPECT_EQ(r.fraction(ShiftCategory::kShifted), 0.5);
  ASSERT_EQ(r.top_shifted.size(), 1u);
  EXPECT_EQ(r.top_shifted[0].base_rank, 5u);
  EXPECT_EQ(r.top_shifted[0].rank_improvement_ratio, 5.0);
  EXPECT_EQ(r.top_shifted[0].position, 1u);
}

TEST(TokenShift, IdenticalModelsAreUnshifted) {
  const Model m = tiny_model(2, 3);
  const auto corpus = random_corpus(4, 12, 64, 2);
  const auto r = token_shift_analysis(m, m, corpus);
  EXPECT_EQ(r.total, 4u * 12u);
  EXPECT_EQ(r.fraction(ShiftCategory::kUnshifted), 1.0);
  EXPECT_TRUE(r.top_shifted.empty());
}

TEST(TokenShift, FractionsSumToOneAndErrors) {
  const auto corpus = random_corpus(4, 12, 64, 2);
  const auto r = token_shift_analysis(tiny_model(2, 3), tiny_model(2, 4), corpus, 5);
  EXPECT_NEAR(r.fractions[0] + r.fractions[1] + r.fractions[2], 1.0, 1e-12);
  EXPECT_LE(r.top_shifted.size(), 5u);
  for (std::size_t i = 1; i < r.top_shifted.size(); ++i) {
    EXPECT_GE(r.top_shifted[i - 1].rank_improvement_ratio, r.top_shifted[i].rank_improvement_ratio);
  }
  auto other = testing::tiny_config();
  other.vocab_size = 32;
  EXPECT_THROW(token_shift_analysis(tiny_model(), init_model(other), corpus), ConfigError);
  EXPECT_THROW(token_shift_analysis(tiny_model(), tiny_model(), Corpus{}), ConfigError);
  EXPECT_EQ(to_json(r)["total"], r.total);
}

// ---- merging ----

class MergeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    base = tiny_model(3, 7);
    plan = plan_uniform(3, 2, ExpansionStrategy::kUniform);
    a = expand(base, plan);
    b = expand(base, plan);
    Rng rng(3);
    for (Model* m : {&a, &b}) {
      for (auto& l : m->layers) {
        if (!l.is_expanded()) continue;
        for (Unit u : kAllUnits) {
          for (auto& v : l.unit(u).data()) v += 0.1 * rng.normal();
        }
      }
    }
  }
  Model base, a, b;
  ExpansionPlan plan;
};

TEST_F(MergeTest, EndpointIsFirstModel) {
  const std::vector<Model> ms{a, b};
  EXPECT_TRUE(merge_expanded(ms, {{1.0, 0.0}}) == a);
}

TEST_F(MergeTest, SelfMergeIsIdempotent) {
  const std::vector<Model> ms{a, a};
  EXPECT_TRUE(merge_expanded(ms, {{0.5, 0.5}}) == a);
}

TEST_F(MergeTest, HalfHalfIsElementwiseMean) {
  const std::vector<Model> ms{a, b};
  const Model m = merge_expanded(ms, {{0.5, 0.5}});
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    for (Unit u : kAllUnits) {
      const auto& x = a.layers[l].unit(u);
      const auto& y = b.layers[l].unit(u);
      const auto& z = m.layers[l].unit(u);
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (m.layers[l].is_expanded()) {
          EXPECT_DOUBLE_EQ(z[i], (x[i] + y[i]) / 2);
        } else {
          EXPECT_EQ(z[i], x[i]);
        }
      }
    }
  }
}

TEST_F(MergeTest, RejectsDivergenceAndMismatch) {
  Model c = b;
  c.layers[0].unit(Unit::kQProj)[0] += 1e-12;
  EXPECT_THROW(merge_expanded(std::vector<Model>{a, c}, {{0.5, 0.5}}), InvariantError);
  Model d = b;
  d.final_norm[0] += 1.0;
  EXPECT_THROW(merge_expanded(std::vector<Model>{a, d}, {{0.5, 0.5}}), InvariantError);
  const Model other_plan = expand(base, plan_uniform(3, 2, ExpansionStrategy::kUniformLastHalf, 2));
  EXPECT_THROW(merge_expanded(std::vector<Model>{a, other_plan}, {{0.5, 0.5}}), InvariantError);
  EXPECT_THROW(merge_expanded(std::vector<Model>{a, b}, {{1.0}}), ConfigError);
  EXPECT_THROW(merge_expanded(std::vector<Model>{a, b}, {{NAN, 0.5}}), ConfigError);
  EXPECT_THROW(merge_expanded(std::vector<Model>{base, base}, {{0.5, 0.5}}), InvariantError);
}

// ---- activations ----

TEST(Activations, MeanOfResidualStream) {
  const Model m = tiny_model(3, 2);
  auto corpus = random_corpus(5, 9, 64, 4);
  corpus.language_tag = "gen";
  const auto cap = activation_capture(m, corpus, 1, 3, 11);
  ASSERT_EQ(cap.samples.size(), 3u);
  EXPECT_FALSE(cap.truncated);
  for (std::size_t i = 1; i < 3; ++i) EXPECT_LT(cap.samples[i - 1].doc_index, cap.samples[i].doc_index);
  for (const auto& s : cap.samples) {
    Graph g;
    const auto tr = build_forward(g, m, corpus.documents[s.doc_index].tokens);
    const auto h = g.value(tr.layer_outputs[1]).data();
    double sum = 0.0;
    for (double v : h) sum += v;
    EXPECT_NEAR(s.value, sum / static_cast<double>(h.size()), 1e-15);
    EXPECT_EQ(s.corpus_tag, "gen");
  }
  const auto all = activation_capture(m, corpus, 1, 50);
  EXPECT_TRUE(all.truncated);
  EXPECT_EQ(all.samples.size(), 5u);
  const std::vector<ActivationCapture> caps{cap};
  EXPECT_EQ(activations_to_csv(caps).rfind("corpus_tag,doc_index,value\n", 0), 0u);
}

TEST(Activations, ZeroModelGivesZeros) {
  Model m = tiny_model(2, 2);
  for (Tensor* t : m.tensors()) t->fill(0.0);
  for (const auto& s : activation_capture(m, random_corpus(4, 6, 64, 1), 1, 4).samples) EXPECT_EQ(s.value, 0.0);
}

// ---- density ----

TEST(Kde, SilvermanBandwidth) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_NEAR(silverman_bandwidth(x), 1.06 * std::sqrt(2.5) * std::pow(5.0, -0.2), 1e-15);
  EXPECT_THROW(silverman_bandwidth(std::vector<double>{1}), ConfigError);
}

TEST(Kde, MatchesDirectSummation) {
  Rng rng(6);
  std::vector<double> x(40);
  for (auto& v : x) v = rng.normal() * 2 + (rng.uniform() < 0.3 ? 5 : 0);
  const auto c = kde_1d(x, std::nullopt, 128);
  EXPECT_EQ(c.bandwidth, silverman_bandwidth(x));
  for (std::size_t i = 0; i < c.grid.size(); i += 13) {
    EXPECT_NEAR(c.density[i], oracle::kde_at(x, c.bandwidth, c.grid[i]), 1e-10);
  }
  double integral = 0.0;
  for (std::size_t i = 1; i < c.grid.size(); ++i) {
    integral += 0.5 * (c.density[i] + c.density[i - 1]) * (c.grid[i] - c.grid[i - 1]);
  }
  EXPECT_NEAR(integral, 1.0, 0.01);
}

TEST(Kde, SymmetricClusterPeaksAtCentre) {
  const std::vector<double> x{-0.2, -0.1, 0.0, 0.1, 0.2};
  const auto c = kde_1d(x, 1.0, 257);
  const auto peak = std::max_element(c.density.begin(), c.density.end()) - c.density.begin();
  EXPECT_NEAR(c.grid[static_cast<std::size_t>(peak)], 0.0, 1e-12);
}

TEST(Kde, Errors) {
  const std::vector<double> flat{2.0, 2.0, 2.0};
  EXPECT_THROW(kde_1d(flat), ConfigError);
  EXPECT_NO_THROW(kde_1d(flat, 0.5));
  EXPECT_THROW(kde_1d(flat, 0.0), ConfigError);
  EXPECT_THROW(kde_1d(std::vector<double>{1.0}, 1.0), ConfigError);
}

// ---- learning-rate allocation ----

TEST(OptimalLr, EqualImportanceGivesAverage) {
  OptimalLrProblem p{.w = {1, 2, 3}, .importance = {0.4, 0.4, 0.4}, .a = 2, .b = 0.5, .eta_avg = 0.01};
  for (double e : optimal_lr_closed_form(p).eta) EXPECT_NEAR(e, 0.01, 1e-15);
}

TEST(OptimalLr, BeatsRandomFeasibleAllocations) {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    OptimalLrProblem p;
    for (int i = 0; i < 5; ++i) {
      p.w.push_back(rng.uniform(1, 100));
      p.importance.push_back(rng.uniform());
    }
    p.a = rng.uniform(0.1, 2);
    p.b = rng.uniform(0.1, 2);
    p.eta_avg = rng.uniform(0.1, 1);
    const auto sol = optimal_lr_closed_form(p);
    double W = 0.0, budget = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      W += p.w[i];
      budget += p.w[i] * sol.eta[i];
    }
    EXPECT_NEAR(budget, p.eta_avg * W, 1e-9 * W);
    EXPECT_NEAR(sol.bound, lr_bound(p, sol.eta), 1e-12);
    for (int s = 0; s < 1000; ++s) {
      std::vector<double> eta(5);
      double mean = 0.0;
      for (std::size_t i = 0; i < 5; ++i) {
        eta[i] = rng.uniform(-1, 2);
        mean += p.w[i] * eta[i] / W;
      }
      for (auto& e : eta) e += p.eta_avg - mean;
      EXPECT_GE(lr_bound(p, eta) - sol.bound, -1e-9);
    }
  }
}

TEST(OptimalLr, Validation) {
  OptimalLrProblem p{.w = {1}, .importance = {0.5, 0.5}};
  EXPECT_THROW(optimal_lr_closed_form(p), ConfigError);
  p.importance = {0.5};
  p.b = 0.0;
  EXPECT_THROW(optimal_lr_closed_form(p), ConfigError);
}

}  // namespace
}  // namespace adept
