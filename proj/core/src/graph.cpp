// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "adept/error.hpp"

namespace adept {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

// C[m,n] (+)= op(A) * op(B) for row-major buffers. Operands are copied into
// Eigen-owned storage first: Eigen picks its peeling from pointer alignment,
// so products on raw maps round differently from one allocation to the next.
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n, bool trans_a, bool trans_b, bool accumulate) {
  const auto M = static_cast<Eigen::Index>(m);
  const auto K = static_cast<Eigen::Index>(k);
  const auto N = static_cast<Eigen::Index>(n);
  RowMat A = trans_a ? RowMat(ConstMap(a, K, M).transpose()) : RowMat(ConstMap(a, M, K));
  RowMat B = trans_b ? RowMat(ConstMap(b, N, K).transpose()) : RowMat(ConstMap(b, K, N));
  RowMat P(M, N);
  P.noalias() = A * B;
  MutMap C(c, M, N);
  if (accumulate) {
    C += P;
  } else {
    C = P;
  }
}

std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

// Maps every flat index of `in` to its flat index after swapping two axes.
std::vector<std::size_t> transpose_index(const Shape& in, std::size_t d0, std::size_t d1) {
  Shape out = in;
  std::swap(out[d0], out[d1]);
  const auto in_st = strides_of(in);
  const auto out_st = strides_of(out);
  std::vector<std::size_t> map(numel(in));
  std::vector<std::size_t> idx(in.size(), 0);
  for (std::size_t flat = 0; flat < map.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t ax = 0; ax < in.size(); ++ax) {
      idx[ax] = rem / in_st[ax];
      rem %= in_st[ax];
    }
    std::swap(idx[d0], idx[d1]);
    std::size_t o = 0;
    for (std::size_t ax = 0; ax < in.size(); ++ax) o += idx[ax] * out_st[ax];
    map[flat] = o;
  }
  return map;
}

}  // namespace

Graph::Node& Graph::node(Var v) {
  if (v.id >= nodes_.size()) throw InvariantError("graph variable " + std::to_string(v.id) + " does not exist");
  return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) throw InvariantError("graph variable " + std::to_string(v.id) + " does not exist");
  return nodes_[v.id];
}

std::string Graph::describe(Var v) const { return node(v).op + " (node " + std::to_string(v.id) + ")"; }

void Graph::shape_error(const std::string& op, const std::string& what) const {
  throw ShapeError(op + " (node " + std::to_string(nodes_.size()) + "): " + what);
}

Var Graph::push(std::string op, Tensor value, std::vector<std::size_t> inputs,
                std::function<void(Graph&, std::size_t)> backward_fn) {
  if (backward_done_) throw InvariantError("cannot extend a graph after backward has run");
  const std::size_t id = nodes_.size();
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + op + " (node " + std::to_string(id) + ")");
  }
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  n.needs_grad = std::any_of(inputs.begin(), inputs.end(),
                             [this](std::size_t i) { return nodes_[i].needs_grad; });
  n.inputs = std::move(inputs);
  if (n.needs_grad) n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return Var{id};
}

std::vector<double>& Graph::grad_buffer(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.val().size(), 0.0);
  return n.grad;
}

Var Graph::parameter(const Tensor& t) {
  if (backward_done_) throw InvariantError("cannot extend a graph after backward has run");
  if (!t.all_finite()) throw NumericError("non-finite parameter bound at node " + std::to_string(nodes_.size()));
  Node n;
  n.op = "parameter";
  n.bound = &t;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(Tensor& t) {
  Var v = parameter(static_cast<const Tensor&>(t));
  if (t.requires_grad()) {
    nodes_[v.id].grad_sink = &t;
    nodes_[v.id].needs_grad = true;
  }
  return v;
}

Var Graph::constant(Tensor t) { return push("constant", std::move(t), {}, nullptr); }

const Tensor& Graph::value(Var v) const { return node(v).val(); }

std::vector<double> Graph::grad(Var v) const {
  const auto& n = node(v);
  if (n.grad.empty()) return std::vector<double>(n.val().size(), 0.0);
  return n.grad;
}

Var Graph::add(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  const bool same = A.shape() == B.shape();
  const bool bias = !same && B.rank() == 1 && A.shape().back() == B.size();
  if (!same && !bias) shape_error("add", to_string(A.shape()) + " + " + to_string(B.shape()));
  Tensor out(A.shape());
  auto o = out.data();
  auto av = A.data();
  auto bv = B.data();
  const std::size_t width = B.size();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[same ? i : i % width];
  return push("add", std::move(out), {a.id, b.id}, [same, width](Graph& g, std::size_t id) {
    const auto ia = g.nodes_[id].inputs[0];
    const auto ib = g.nodes_[id].inputs[1];
    if (g.nodes_[ia].needs_grad) {
      auto& ga = g.grad_buffer(ia);
      const auto& go = g.nodes_[id].grad;
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.nodes_[ib].needs_grad) {
      auto& gb = g.grad_buffer(ib);
      const auto& go = g.nodes_[id].grad;
      for (std::size_t i = 0; i < go.size(); ++i) gb[same ? i : i % width] += go[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.shape() != B.shape()) shape_error("mul", to_string(A.shape()) + " * " + to_string(B.shape()));
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return push("mul", std::move(out), {a.id, b.id}, [](Graph& g, std::size_t id) {
    const auto ia = g.nodes_[id].inputs[0];
    const auto ib = g.nodes_[id].inputs[1];
    const auto& go = g.nodes_[id].grad;
    if (g.nodes_[ia].needs_grad) {
      auto& ga = g.grad_buffer(ia);
      auto bv = g.nodes_[ib].val().data();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (g.nodes_[ib].needs_grad) {
      auto& gb = g.grad_buffer(ib);
      auto av = g.nodes_[ia].val().data();
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

Var Graph::scale(Var a, double s) {
  const auto& A = value(a);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * s;
  return push("scale", std::move(out), {a.id}, [s](Graph& g, std::size_t id) {
    const auto ia = g.nodes_[id].inputs[0];
    auto& ga = g.grad_buffer(ia);
    const auto& go = g.nodes_[id].grad;
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * s;
  });
}

Var Graph::matmul(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  std::size_t batch = 1, m = 0, k = 0, n = 0;
  Shape out_shape;
  if (A.rank() == 2 && B.rank() == 2) {
    m = A.dim(0), k = A.dim(1), n = B.dim(1);
    if (B.dim(0) != k) shape_error("matmul", to_string(A.shape()) + " x " + to_string(B.shape()));
    out_shape = {m, n};
  } else if (A.rank() == 3 && B.rank() == 3) {
    batch = A.dim(0), m = A.dim(1), k = A.dim(2), n = B.dim(2);
    if (B.dim(0) != batch || B.dim(1) != k) {
      shape_error("matmul", to_string(A.shape()) + " x " + to_string(B.shape()));
    }
    out_shape = {batch, m, n};
  } else {
    shape_error("matmul", "unsupported ranks " + to_string(A.shape()) + " x " + to_string(B.shape()));
  }
  Tensor out(out_shape);
  for (std::size_t p = 0; p < batch; ++p) {
    gemm(A.data().data() + p * m * k, B.data().data() + p * k * n, out.data().data() + p * m * n, m,
         k, n, false, false, false);
  }
  return push("matmul", std::move(out), {a.id, b.id}, [batch, m, k, n](Graph& g, std::size_t id) {
    const auto ia = g.nodes_[id].inputs[0];
    const auto ib = g.nodes_[id].inputs[1];
    const double* go = g.nodes_[id].grad.data();
    if (g.nodes_[ia].needs_grad) {
      double* ga = g.grad_buffer(ia).data();
      const double* bv = g.nodes_[ib].val().data().data();
      for (std::size_t p = 0; p < batch; ++p) {
        gemm(go + p * m * n, bv + p * k * n, ga + p * m * k, m, n, k, false, true, true);
      }
    }
    if (g.nodes_[ib].needs_grad) {
      double* gb = g.grad_buffer(ib).data();
      const double* av = g.nodes_[ia].val().data().data();
      for (std::size_t p = 0; p < batch; ++p) {
        gemm(av + p * m * k, go + p * m * n, gb + p * k * n, k, m, n, true, false, true);
      }
    }
  });
}

Var Graph::transpose(Var a, std::size_t dim0, std::size_t dim1) {
  const auto& A = value(a);
  if (dim0 >= A.rank() || dim1 >= A.rank()) {
    shape_error("transpose", "axes " + std::to_string(dim0) + "," + std::to_string(dim1) + " on " +
                                 to_string(A.shape()));
  }
  Shape out_shape = A.shape();
  std::swap(out_shape[dim0], out_shape[dim1]);
  auto map = transpose_index(A.shape(), dim0, dim1);
  Tensor out(out_shape);
  for (std::size_t i = 0; i < map.size(); ++i) out[map[i]] = A[i];
  return push("transpose", std::move(out), {a.id}, [map = std::move(map)](Graph& g, std::size_t id) {
    auto& ga = g.grad_buffer(g.nodes_[id].inputs[0]);
    const auto& go = g.nodes_[id].grad;
    for (std::size_t i = 0; i < map.size(); ++i) ga[i] += go[map[i]];
  });
}

Var Graph::reshape(Var a, Shape shape) {
  const auto& A = value(a);
  if (numel(shape) != A.size()) shape_error("reshape", to_string(A.shape()) + " -> " + to_string(shape));
  std::vector<double> copy(A.data().begin(), A.data().end());
  return push("reshape", Tensor(std::move(shape), std::move(copy)), {a.id}, [](Graph& g, std::size_t id) {
    auto& ga = g.grad_buffer(g.nodes_[id].inputs[0]);
    const auto& go = g.nodes_[id].grad;
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
  });
}

Var Graph::softmax(Var a) {
  const auto& A = value(a);
  const std::size_t width = A.shape().back();
  const std::size_t rows = A.size() / width;
  Tensor out(A.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = A.data().data() + r * width;
    double* y = out.data().data() + r * width;
    const double mx = *std::max_element(x, x + width);
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < width; ++j) y[j] /= z;
  }
  return push("softmax", std::move(out), {a.id}, [rows, width](Graph& g, std::size_t id) {
    auto& ga = g.grad_buffer(g.nodes_[id].inputs[0]);
    const auto& go = g.nodes_[id].grad;
    auto y = g.nodes_[id].value.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * width;
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += go[o + j] * y[o + j];
      for (std::size_t j = 0; j < width; ++j) ga[o + j] += y[o + j] * (go[o + j] - dot);
    }
  });
}

Var Graph::rms_norm(Var x, Var weight, double eps) {
  const auto& X = value(x);
  const auto& W = value(weight);
  const std::size_t d = X.shape().back();
  if (W.rank() != 1 || W.size() != d) {
    shape_error("rms_norm", "weight " + to_string(W.shape()) + " for input " + to_string(X.shape()));
  }
  const std::size_t rows = X.size() / d;
  Tensor out(X.shape());
  std::vector<double> inv_rms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = X.data().data() + r * d;
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += xr[j] * xr[j];
    inv_rms[r] = 1.0 / std::sqrt(ss / static_cast<double>(d) + eps);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xr[j] * inv_rms[r] * W[j];
  }
  return push("rms_norm", std::move(out), {x.id, weight.id},
              [rows, d, inv_rms = std::move(inv_rms)](Graph& g, std::size_t id) {
                const auto ix = g.nodes_[id].inputs[0];
                const auto iw = g.nodes_[id].inputs[1];
                const auto& go = g.nodes_[id].grad;
                auto xv = g.nodes_[ix].val().data();
                auto wv = g.nodes_[iw].val().data();
                if (g.nodes_[ix].needs_grad) {
                  auto& gx = g.grad_buffer(ix);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const std::size_t o = r * d;
                    const double s = inv_rms[r];
                    double dot = 0.0;
                    for (std::size_t j = 0; j < d; ++j) dot += go[o + j] * wv[j] * xv[o + j];
                    const double c = dot * s * s * s / static_cast<double>(d);
                    for (std::size_t j = 0; j < d; ++j) gx[o + j] += go[o + j] * wv[j] * s - xv[o + j] * c;
                  }
                }
                if (g.nodes_[iw].needs_grad) {
                  auto& gw = g.grad_buffer(iw);
                  for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < d; ++j) gw[j] += go[r * d + j] * xv[r * d + j] * inv_rms[r];
                  }
                }
              });
}

Var Graph::embedding(Var table, std::span<const int> ids) {
  const auto& E = value(table);
  if (E.rank() != 2) shape_error("embedding", "table must be 2-D, got " + to_string(E.shape()));
  const std::size_t vocab = E.dim(0), d = E.dim(1);
  if (ids.empty()) shape_error("embedding", "empty id sequence");
  std::vector<int> idx(ids.begin(), ids.end());
  Tensor out({idx.size(), d});
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] < 0 || static_cast<std::size_t>(idx[t]) >= vocab) {
      shape_error("embedding", "id " + std::to_string(idx[t]) + " at position " + std::to_string(t) +
                                   " outside vocab of " + std::to_string(vocab));
    }
    std::copy_n(E.data().data() + static_cast<std::size_t>(idx[t]) * d, d, out.data().data() + t * d);
  }
  return push("embedding", std::move(out), {table.id}, [d, idx = std::move(idx)](Graph& g, std::size_t id) {
    auto& ge = g.grad_buffer(g.nodes_[id].inputs[0]);
    const auto& go = g.nodes_[id].grad;
    for (std::size_t t = 0; t < idx.size(); ++t) {
      const std::size_t row = static_cast<std::size_t>(idx[t]) * d;
      for (std::size_t j = 0; j < d; ++j) ge[row + j] += go[t * d + j];
    }
  });
}

Var Graph::causal_mask(Var scores) {
  const auto& S = value(scores);
  if (S.rank() < 2 || S.dim(S.rank() - 1) != S.dim(S.rank() - 2)) {
    shape_error("causal_mask", "expects [..., T, T], got " + to_string(S.shape()));
  }
  const std::size_t T = S.shape().back();
  const std::size_t mats = S.size() / (T * T);
  Tensor out = S;
  for (std::size_t p = 0; p < mats; ++p) {
    for (std::size_t i = 0; i < T; ++i) {
      for (std::size_t j = i + 1; j < T; ++j) out[p * T * T + i * T + j] = kMaskedLogit;
    }
  }
  return push("causal_mask", std::move(out), {scores.id}, [mats, T](Graph& g, std::size_t id) {
    auto& gs = g.grad_buffer(g.nodes_[id].inputs[0]);
    const auto& go = g.nodes_[id].grad;
    for (std::size_t p = 0; p < mats; ++p) {
      for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = 0; j <= i; ++j) gs[p * T * T + i * T + j] += go[p * T * T + i * T + j];
      }
    }
  });
}

Var Graph::silu(Var a) {
  const auto& A = value(a);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] / (1.0 + std::exp(-A[i]));
  return push("silu", std::move(out), {a.id}, [](Graph& g, std::size_t id) {
    const auto ia = g.nodes_[id].inputs[0];
    auto& ga = g.grad_buffer(ia);
    const auto& go = g.nodes_[id].grad;
    auto x = g.nodes_[ia].val().data();
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double sig = 1.0 / (1.0 + std::exp(-x[i]));
      ga[i] += go[i] * sig * (1.0 + x[i] * (1.0 - sig));
    }
  });
}

Var Graph::rope(Var x, std::size_t n_heads, double theta) {
  const auto& X = value(x);
  if (X.rank() != 2 || n_heads == 0 || X.dim(1) % n_heads != 0 || (X.dim(1) / n_heads) % 2 != 0) {
    shape_error("rope", "input " + to_string(X.shape()) + " with " + std::to_string(n_heads) + " heads");
  }
  const std::size_t T = X.dim(0), d = X.dim(1), dh = d / n_heads;
  // Interleaved pairs (2i, 2i+1) within each head rotate by pos * theta^(-2i/dh).
  std::vector<double> cs(T * dh / 2), sn(T * dh / 2);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < dh / 2; ++i) {
      const double freq = std::pow(theta, -2.0 * static_cast<double>(i) / static_cast<double>(dh));
      cs[t * dh / 2 + i] = std::cos(static_cast<double>(t) * freq);
      sn[t * dh / 2 + i] = std::sin(static_cast<double>(t) * freq);
    }
  }
  Tensor out(X.shape());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      for (std::size_t i = 0; i < dh / 2; ++i) {
        const std::size_t o = t * d + h * dh + 2 * i;
        const double c = cs[t * dh / 2 + i], s = sn[t * dh / 2 + i];
        out[o] = X[o] * c - X[o + 1] * s;
        out[o + 1] = X[o] * s + X[o + 1] * c;
      }
    }
  }
  return push("rope", std::move(out), {x.id},
              [T, d, dh, n_heads, cs = std::move(cs), sn = std::move(sn)](Graph& g, std::size_t id) {
                auto& gx = g.grad_buffer(g.nodes_[id].inputs[0]);
                const auto& go = g.nodes_[id].grad;
                for (std::size_t t = 0; t < T; ++t) {
                  for (std::size_t h = 0; h < n_heads; ++h) {
                    for (std::size_t i = 0; i < dh / 2; ++i) {
                      const std::size_t o = t * d + h * dh + 2 * i;
                      const double c = cs[t * dh / 2 + i], s = sn[t * dh / 2 + i];
                      gx[o] += go[o] * c + go[o + 1] * s;
                      gx[o + 1] += -go[o] * s + go[o + 1] * c;
                    }
                  }
                }
              });
}

Var Graph::sum(Var a) {
  const auto& A = value(a);
  double s = 0.0;
  for (double v : A.data()) s += v;
  return push("sum", Tensor::scalar(s), {a.id}, [](Graph& g, std::size_t id) {
    auto& ga = g.grad_buffer(g.nodes_[id].inputs[0]);
    const double go = g.nodes_[id].grad[0];
    for (auto& v : ga) v += go;
  });
}

Var Graph::cross_entropy(Var logits, std::span<const int> targets, const std::vector<bool>& mask) {
  const auto& Z = value(logits);
  if (Z.rank() != 2) shape_error("cross_entropy", "logits must be [T, V], got " + to_string(Z.shape()));
  const std::size_t T = Z.dim(0), V = Z.dim(1);
  if (targets.size() != T || mask.size() != T) {
    shape_error("cross_entropy", std::to_string(targets.size()) + " targets / " + std::to_string(mask.size()) +
                                     " mask entries for " + std::to_string(T) + " rows");
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<char> use(mask.begin(), mask.end());
  const auto count = static_cast<std::size_t>(std::count(use.begin(), use.end(), 1));
  if (count == 0) shape_error("cross_entropy", "mask selects no position");
  std::vector<double> probs(T * V, 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (!use[t]) continue;
    if (tgt[t] < 0 || static_cast<std::size_t>(tgt[t]) >= V) {
      shape_error("cross_entropy", "target " + std::to_string(tgt[t]) + " at row " + std::to_string(t) +
                                       " outside vocab of " + std::to_string(V));
    }
    const double* z = Z.data().data() + t * V;
    const double mx = *std::max_element(z, z + V);
    double se = 0.0;
    for (std::size_t j = 0; j < V; ++j) se += std::exp(z[j] - mx);
    const double lse = mx + std::log(se);
    total += lse - z[tgt[t]];
    for (std::size_t j = 0; j < V; ++j) probs[t * V + j] = std::exp(z[j] - lse);
  }
  const double inv = 1.0 / static_cast<double>(count);
  return push("cross_entropy", Tensor::scalar(total * inv), {logits.id},
              [T, V, inv, tgt = std::move(tgt), use = std::move(use), probs = std::move(probs)](Graph& g,
                                                                                                std::size_t id) {
                auto& gz = g.grad_buffer(g.nodes_[id].inputs[0]);
                const double go = g.nodes_[id].grad[0] * inv;
                for (std::size_t t = 0; t < T; ++t) {
                  if (!use[t]) continue;
                  for (std::size_t j = 0; j < V; ++j) gz[t * V + j] += go * probs[t * V + j];
                  gz[t * V + static_cast<std::size_t>(tgt[t])] -= go;
                }
              });
}

void Graph::backward(Var loss) {
  if (nodes_.empty()) throw InvariantError("backward called before any forward computation");
  if (backward_done_) throw InvariantError("backward already ran on this graph");
  auto& root = node(loss);
  if (root.val().size() != 1) {
    throw ShapeError("backward root " + describe(loss) + " is not a scalar: " + to_string(root.val().shape()));
  }
  backward_done_ = true;
  if (!root.needs_grad) return;
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward_fn) n.backward_fn(*this, id);
    if (n.grad_sink) {
      auto g = n.grad_sink->grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  }
}

std::vector<double> fd_gradient(const std::function<double(const Tensor&)>& f, Tensor& x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite-difference epsilon must be positive");
  std::vector<double> g(x.size());
  auto d = x.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double orig = d[i];
    d[i] = orig + eps;
    const double fp = f(x);
    d[i] = orig - eps;
    const double fm = f(x);
    d[i] = orig;
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace adept
