// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adept/tensor.hpp"

namespace adept {

/// Handle to a node of a Graph. Only meaningful for the graph that issued it.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Define-by-run tape of primitive operations.
///
/// Every op appends one node holding its forward value, so the node list is
/// always in topological order and `backward` walks it in exact reverse.
/// Parameters enter through `parameter()`, which binds a Tensor by reference;
/// their data must stay untouched while the graph is alive. After backward,
/// gradients of bound tensors that require grad are *added* to
/// `Tensor::grad()`; callers zero them explicitly between steps.
///
/// Each forward op validates shapes and checks its output for NaN/Inf, raising
/// ShapeError / NumericError that name the offending node.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var parameter(const Tensor& t);
  Var parameter(Tensor& t);
  Var constant(Tensor t);

  Var add(Var a, Var b);  // same shape, or b is a bias over the trailing dim
  Var mul(Var a, Var b);  // elementwise, same shape
  Var scale(Var a, double s);
  Var matmul(Var a, Var b);  // [m,k]x[k,n] or batched [B,m,k]x[B,k,n]
  Var transpose(Var a, std::size_t dim0, std::size_t dim1);
  Var reshape(Var a, Shape shape);
  Var softmax(Var a);  // over the last dim, max-subtracted
  Var rms_norm(Var x, Var weight, double eps = 1e-6);
  Var embedding(Var table, std::span<const int> ids);
  Var causal_mask(Var scores);  // [..., T, T]; future positions get kMaskedLogit
  Var silu(Var a);
  Var rope(Var x, std::size_t n_heads, double theta = 10000.0);  // x: [T, d]
  Var sum(Var a);
  /// Mean negative log-likelihood over rows whose mask entry is true, fused
  /// with log-softmax. logits: [T, V]; targets and mask have T entries.
  Var cross_entropy(Var logits, std::span<const int> targets, const std::vector<bool>& mask);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward root with respect to v (zeros if v did
  /// not participate).
  std::vector<double> grad(Var v) const;

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  std::string describe(Var v) const;

  static constexpr double kMaskedLogit = -1e30;

 private:
  struct Node {
    std::string op;
    Tensor value;                  // owned value for non-parameter nodes
    const Tensor* bound = nullptr; // parameter nodes alias the caller's tensor
    Tensor* grad_sink = nullptr;   // set when the bound tensor requires grad
    std::vector<std::size_t> inputs;
    bool needs_grad = false;
    std::vector<double> grad;
    std::function<void(Graph&, std::size_t)> backward_fn;

    const Tensor& val() const { return bound ? *bound : value; }
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(std::string op, Tensor value, std::vector<std::size_t> inputs,
           std::function<void(Graph&, std::size_t)> backward_fn);
  std::vector<double>& grad_buffer(std::size_t id);
  [[noreturn]] void shape_error(const std::string& op, const std::string& what) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

/// Central-difference gradient (f(x+eps*e_i) - f(x-eps*e_i)) / (2 eps) for
/// every coordinate of x. x is restored exactly before returning.
std::vector<double> fd_gradient(const std::function<double(const Tensor&)>& f, Tensor& x,
                                double eps);

/// |a-b| / max(|a|, |b|, floor), the relative error used by gradient checks.
double relative_error(double a, double b, double floor = 1e-6);

}  // namespace adept
