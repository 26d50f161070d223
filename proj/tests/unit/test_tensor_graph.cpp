// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "adept/error.hpp"
#include "adept/graph.hpp"
#include "adept/random.hpp"
#include "adept/tensor.hpp"

namespace adept {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true) {
  Tensor t(std::move(shape), requires_grad);
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

// Compares backward() against central differences for a scalar graph built
// by `build` from the tensors in `inputs`.
template <typename Build>
double max_fd_error(std::vector<Tensor>& inputs, Build build) {
  for (auto& t : inputs) t.zero_grad();
  {
    Graph g;
    std::vector<Var> vars;
    for (auto& t : inputs) vars.push_back(g.parameter(t));
    g.backward(build(g, vars));
  }
  double worst = 0.0;
  for (auto& x : inputs) {
    const std::vector<double> analytic(x.grad().begin(), x.grad().end());
    auto numeric = fd_gradient(
        [&](const Tensor&) {
          Graph g;
          std::vector<Var> vars;
          for (auto& t : inputs) vars.push_back(g.constant(t));
          return g.value(build(g, vars)).item();
        },
        x, 1e-5);
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  }
  return worst;
}

TEST(Tensor, ShapeAndFill) {
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  t.fill(1.5);
  for (double v : t.data()) EXPECT_EQ(v, 1.5);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(Tensor, GradBufferFollowsRequiresGrad) {
  Tensor t({4}, false);
  EXPECT_TRUE(t.grad().empty());
  t.set_requires_grad(true);
  EXPECT_EQ(t.grad().size(), 4u);
  t.set_requires_grad(false);
  EXPECT_TRUE(t.grad().empty());
}

TEST(Graph, SoftmaxOfZerosIsUniform) {
  Graph g;
  auto s = g.softmax(g.constant(Tensor::zeros({4})));
  for (double v : g.value(s).data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Graph, CrossEntropyOfCertainPredictionIsZero) {
  Graph g;
  Tensor logits({1, 3}, {0.0, 800.0, 0.0});
  const std::vector<int> target{1};
  auto loss = g.cross_entropy(g.constant(logits), target, {true});
  EXPECT_EQ(g.value(loss).item(), 0.0);
}

TEST(Graph, SumGradientIsOnes) {
  Rng rng(1);
  Tensor x = random_tensor({2, 3, 4}, rng);
  Graph g;
  g.backward(g.sum(g.parameter(x)));
  for (double v : x.grad()) EXPECT_EQ(v, 1.0);
}

TEST(Graph, ProductOfScalars) {
  Tensor x = Tensor::scalar(3.0, true), y = Tensor::scalar(5.0, true);
  Graph g;
  g.backward(g.sum(g.mul(g.parameter(x), g.parameter(y))));
  EXPECT_EQ(x.grad()[0], 5.0);
  EXPECT_EQ(y.grad()[0], 3.0);
}

TEST(Graph, BackwardBeforeForwardIsRejected) {
  Graph g;
  EXPECT_THROW(g.backward(Var{0}), InvariantError);
}

TEST(Graph, BackwardTwiceOrOnNonScalarIsRejected) {
  Tensor x({2}, {1.0, 2.0}, true);
  Graph g;
  auto v = g.parameter(x);
  EXPECT_THROW(g.backward(v), Error);
  auto s = g.sum(v);
  g.backward(s);
  EXPECT_THROW(g.backward(s), Error);
}

TEST(Graph, ShapeMismatchNamesTheOp) {
  Graph g;
  auto a = g.constant(Tensor::zeros({2, 3}));
  auto b = g.constant(Tensor::zeros({2, 3}));
  try {
    g.matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
  }
}

TEST(FdGradient, Square) {
  Tensor x = Tensor::scalar(2.0);
  auto g = fd_gradient([](const Tensor& t) { return t[0] * t[0]; }, x, 1e-5);
  EXPECT_NEAR(g[0], 4.0, 1e-8);
  EXPECT_EQ(x[0], 2.0);
}

TEST(FdGradient, ConstantHasZeroGradient) {
  Tensor x({3}, {1.0, -2.0, 0.5});
  auto g = fd_gradient([](const Tensor&) { return 7.0; }, x, 1e-5);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(GraphOps, ElementwiseAndShapeOpsMatchFiniteDifferences) {
  Rng rng(2);
  std::vector<Tensor> in{random_tensor({3, 4}, rng), random_tensor({3, 4}, rng), random_tensor({4}, rng)};
  auto f = [](Graph& g, std::vector<Var>& v) {
    auto a = g.add(g.mul(v[0], g.silu(v[1])), v[2]);
    auto t = g.reshape(g.transpose(a, 0, 1), {2, 6});
    return g.sum(g.mul(g.scale(t, 0.7), t));
  };
  EXPECT_LT(max_fd_error(in, f), 1e-6);
}

TEST(GraphOps, MatmulSoftmaxMatchFiniteDifferences) {
  Rng rng(3);
  std::vector<Tensor> in{random_tensor({2, 3, 4}, rng), random_tensor({2, 4, 3}, rng), random_tensor({2, 3, 3}, rng)};
  auto f = [](Graph& g, std::vector<Var>& v) {
    auto p = g.softmax(g.causal_mask(g.matmul(v[0], v[1])));
    return g.sum(g.mul(p, v[2]));
  };
  EXPECT_LT(max_fd_error(in, f), 1e-6);
}

TEST(GraphOps, NormRopeEmbeddingCrossEntropyMatchFiniteDifferences) {
  Rng rng(4);
  std::vector<Tensor> in{random_tensor({10, 8}, rng), random_tensor({8}, rng)};
  const std::vector<int> ids{1, 4, 9, 0, 4};
  const std::vector<int> targets{2, 7, 0, 3, 3};
  const std::vector<bool> mask{true, false, true, true, true};
  auto f = [&](Graph& g, std::vector<Var>& v) {
    auto x = g.rope(g.rms_norm(g.embedding(v[0], ids), v[1]), 2);
    return g.cross_entropy(x, targets, mask);
  };
  EXPECT_LT(max_fd_error(in, f), 1e-6);
}

TEST(Graph, DeterministicAcrossRuns) {
  Rng rng(5);
  Tensor a = random_tensor({4, 4}, rng);
  auto run = [&] {
    a.zero_grad();
    Graph g;
    auto l = g.sum(g.softmax(g.matmul(g.parameter(a), g.parameter(a))));
    g.backward(l);
    return std::make_pair(g.value(l).item(), std::vector<double>(a.grad().begin(), a.grad().end()));
  };
  EXPECT_EQ(run(), run());
}

TEST(RelativeError, UsesFloorForTinyValues) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0, 1e-6), 1e-3);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
}

}  // namespace
}  // namespace adept
