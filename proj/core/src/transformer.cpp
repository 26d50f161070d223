// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/transformer.hpp"

#include <cmath>
#include <sstream>
#include <type_traits>

#include "adept/error.hpp"
#include "adept/random.hpp"

namespace adept {

void ModelConfig::validate() const {
  std::vector<std::string> problems;
  if (n_layers < 1) problems.emplace_back("n_layers must be >= 1");
  if (d_model < 1) problems.emplace_back("d_model must be >= 1");
  if (n_heads < 1) problems.emplace_back("n_heads must be >= 1");
  if (d_ff < 1) problems.emplace_back("d_ff must be >= 1");
  if (vocab_size < 2) problems.emplace_back("vocab_size must be >= 2");
  if (max_seq_len < 2) problems.emplace_back("max_seq_len must be >= 2");
  if (n_heads >= 1 && d_model % n_heads != 0) {
    problems.emplace_back("d_model not divisible by n_heads (" + std::to_string(d_model) + " % " +
                          std::to_string(n_heads) + ")");
  } else if (n_heads >= 1 && d_model >= 1 && head_dim() % 2 != 0) {
    problems.emplace_back("head dimension " + std::to_string(head_dim()) + " must be even for rotary positions");
  }
  if (problems.empty()) return;
  std::string msg = "invalid model config:";
  for (const auto& p : problems) msg += " " + p + ";";
  throw ConfigError(msg);
}

std::string_view unit_name(Unit u) {
  switch (u) {
    case Unit::kQProj: return "q_proj";
    case Unit::kKProj: return "k_proj";
    case Unit::kVProj: return "v_proj";
    case Unit::kOProj: return "o_proj";
    case Unit::kGateProj: return "gate_proj";
    case Unit::kUpProj: return "up_proj";
    case Unit::kDownProj: return "down_proj";
    case Unit::kInputLayernorm: return "input_layernorm";
    case Unit::kPostAttentionLayernorm: return "post_attention_layernorm";
  }
  return "?";
}

std::optional<Unit> parse_unit(std::string_view name) {
  for (Unit u : kAllUnits) {
    if (unit_name(u) == name) return u;
  }
  return std::nullopt;
}

Shape unit_shape(const ModelConfig& c, Unit u) {
  switch (u) {
    case Unit::kQProj:
    case Unit::kKProj:
    case Unit::kVProj:
    case Unit::kOProj: return {c.d_model, c.d_model};
    case Unit::kGateProj:
    case Unit::kUpProj: return {c.d_model, c.d_ff};
    case Unit::kDownProj: return {c.d_ff, c.d_model};
    case Unit::kInputLayernorm:
    case Unit::kPostAttentionLayernorm: return {c.d_model};
  }
  return {};
}

Layer::Layer(const ModelConfig& config) {
  for (Unit u : kAllUnits) unit(u) = Tensor(unit_shape(config, u), true);
}

void Layer::mark_copy_of(int source_layer) {
  origin_ = LayerOrigin::kExpandedCopy;
  source_ = source_layer;
}

void Layer::set_frozen(bool frozen) {
  frozen_ = frozen;
  for (auto& t : units_) t.set_requires_grad(!frozen);
}

std::size_t Layer::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : units_) n += t.size();
  return n;
}

std::size_t Model::n_expanded() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.is_expanded() ? 1 : 0;
  return n;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

std::size_t Model::trainable_parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->requires_grad() ? t->size() : 0;
  return n;
}

void Model::set_shared_frozen(bool frozen) {
  token_embedding.set_requires_grad(!frozen);
  final_norm.set_requires_grad(!frozen);
  if (lm_head.size() > 0) lm_head.set_requires_grad(!frozen);
}

void Model::set_all_frozen(bool frozen) {
  set_shared_frozen(frozen);
  for (auto& l : layers) l.set_frozen(frozen);
}

void Model::zero_grad() {
  for (auto* t : tensors()) t->zero_grad();
}

void Model::clear_masks() {
  for (auto& l : layers) l.set_masked(false);
}

std::vector<Tensor*> Model::tensors() {
  std::vector<Tensor*> out;
  out.push_back(&token_embedding);
  for (auto& l : layers) {
    for (Unit u : kAllUnits) out.push_back(&l.unit(u));
  }
  out.push_back(&final_norm);
  if (lm_head.size() > 0) out.push_back(&lm_head);
  return out;
}

std::vector<const Tensor*> Model::tensors() const {
  std::vector<const Tensor*> out;
  for (auto* t : const_cast<Model*>(this)->tensors()) out.push_back(t);
  return out;
}

bool operator==(const Model& a, const Model& b) {
  return a.config == b.config && a.token_embedding == b.token_embedding && a.layers == b.layers &&
         a.final_norm == b.final_norm && a.lm_head == b.lm_head;
}

Model init_model(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  auto fill_normal = [&rng](Tensor& t, double stddev) {
    for (auto& v : t.data()) v = stddev * rng.normal();
  };
  const double d = static_cast<double>(config.d_model);
  const double ff = static_cast<double>(config.d_ff);
  const double depth_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(config.n_layers));

  Model m;
  m.config = config;
  m.token_embedding = Tensor({config.vocab_size, config.d_model}, true);
  fill_normal(m.token_embedding, 1.0 / std::sqrt(d));
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    Layer layer(config);
    fill_normal(layer.unit(Unit::kQProj), 1.0 / std::sqrt(d));
    fill_normal(layer.unit(Unit::kKProj), 1.0 / std::sqrt(d));
    fill_normal(layer.unit(Unit::kVProj), 1.0 / std::sqrt(d));
    fill_normal(layer.unit(Unit::kOProj), depth_scale / std::sqrt(d));
    fill_normal(layer.unit(Unit::kGateProj), 1.0 / std::sqrt(d));
    fill_normal(layer.unit(Unit::kUpProj), 1.0 / std::sqrt(d));
    fill_normal(layer.unit(Unit::kDownProj), depth_scale / std::sqrt(ff));
    layer.unit(Unit::kInputLayernorm).fill(1.0);
    layer.unit(Unit::kPostAttentionLayernorm).fill(1.0);
    m.layers.push_back(std::move(layer));
  }
  m.final_norm = Tensor({config.d_model}, true);
  m.final_norm.fill(1.0);
  if (!config.tie_embeddings) {
    m.lm_head = Tensor({config.vocab_size, config.d_model}, true);
    fill_normal(m.lm_head, 1.0 / std::sqrt(d));
  }
  return m;
}

Tensor& unit_view(Model& model, std::size_t layer, Unit unit) {
  if (layer >= model.layers.size()) {
    throw ConfigError("layer index " + std::to_string(layer) + " out of range (model has " +
                      std::to_string(model.layers.size()) + " layers)");
  }
  return model.layers[layer].unit(unit);
}

const Tensor& unit_view(const Model& model, std::size_t layer, Unit unit) {
  return unit_view(const_cast<Model&>(model), layer, unit);
}

void check_tokens(const ModelConfig& config, std::span<const int> tokens) {
  if (tokens.empty()) throw ConfigError("empty token sequence");
  if (tokens.size() > config.max_seq_len) {
    throw ConfigError("sequence length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                      std::to_string(config.max_seq_len));
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || static_cast<std::size_t>(tokens[i]) >= config.vocab_size) {
      throw ConfigError("token " + std::to_string(tokens[i]) + " at position " + std::to_string(i) +
                        " outside vocab of " + std::to_string(config.vocab_size));
    }
  }
}

namespace {

template <typename M>
ForwardTrace forward_impl(Graph& g, M& model, std::span<const int> tokens) {
  check_tokens(model.config, tokens);
  const auto& c = model.config;
  const std::size_t T = tokens.size(), d = c.d_model, H = c.n_heads, dh = c.head_dim();
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardTrace trace;
  Var embedding = g.parameter(model.token_embedding);
  Var x = g.embedding(embedding, tokens);
  trace.embedded = x;

  auto split_heads = [&](Var v) { return g.transpose(g.reshape(v, {T, H, dh}), 0, 1); };  // [H,T,dh]

  for (auto& layer : model.layers) {
    if (layer.masked()) {
      trace.layer_outputs.push_back(x);
      continue;
    }
    // Attention branch.
    Var h = g.rms_norm(x, g.parameter(layer.unit(Unit::kInputLayernorm)));
    Var q = g.rope(g.matmul(h, g.parameter(layer.unit(Unit::kQProj))), H);
    Var k = g.rope(g.matmul(h, g.parameter(layer.unit(Unit::kKProj))), H);
    Var v = g.matmul(h, g.parameter(layer.unit(Unit::kVProj)));
    Var scores = g.matmul(split_heads(q), g.transpose(split_heads(k), 1, 2));  // [H,T,T]
    Var probs = g.softmax(g.causal_mask(g.scale(scores, attn_scale)));
    Var ctx = g.matmul(probs, split_heads(v));                                // [H,T,dh]
    ctx = g.reshape(g.transpose(ctx, 0, 1), {T, d});
    x = g.add(x, g.matmul(ctx, g.parameter(layer.unit(Unit::kOProj))));

    // SwiGLU feed-forward branch.
    Var h2 = g.rms_norm(x, g.parameter(layer.unit(Unit::kPostAttentionLayernorm)));
    Var gate = g.silu(g.matmul(h2, g.parameter(layer.unit(Unit::kGateProj))));
    Var up = g.matmul(h2, g.parameter(layer.unit(Unit::kUpProj)));
    x = g.add(x, g.matmul(g.mul(gate, up), g.parameter(layer.unit(Unit::kDownProj))));
    trace.layer_outputs.push_back(x);
  }

  Var hf = g.rms_norm(x, g.parameter(model.final_norm));
  Var head = model.lm_head.size() > 0 ? g.parameter(model.lm_head) : embedding;
  trace.logits = g.matmul(hf, g.transpose(head, 0, 1));
  return trace;
}

template <typename M>
Var loss_impl(Graph& g, M& model, std::span<const int> tokens, const std::vector<bool>& mask) {
  if (mask.size() != tokens.size()) {
    throw ConfigError("loss mask has " + std::to_string(mask.size()) + " entries for " +
                      std::to_string(tokens.size()) + " tokens");
  }
  if (tokens.size() < 2) throw ConfigError("language-model loss needs at least two tokens");
  const int last = tokens.back();
  if (last < 0 || static_cast<std::size_t>(last) >= model.config.vocab_size) {
    throw ConfigError("token " + std::to_string(last) + " at position " + std::to_string(tokens.size() - 1) +
                      " outside vocab of " + std::to_string(model.config.vocab_size));
  }
  std::vector<bool> target_mask(mask.begin() + 1, mask.end());
  bool any = false;
  for (bool b : target_mask) any = any || b;
  if (!any) throw ConfigError("loss mask selects no target position");

  auto trace = forward_impl(g, model, tokens.first(tokens.size() - 1));
  return g.cross_entropy(trace.logits, tokens.subspan(1), target_mask);
}

}  // namespace

ForwardTrace build_forward(Graph& graph, Model& model, std::span<const int> tokens) {
  return forward_impl(graph, model, tokens);
}

ForwardTrace build_forward(Graph& graph, const Model& model, std::span<const int> tokens) {
  return forward_impl(graph, model, tokens);
}

Var build_lm_loss(Graph& graph, Model& model, std::span<const int> tokens, const std::vector<bool>& mask) {
  return loss_impl(graph, model, tokens, mask);
}

Var build_lm_loss(Graph& graph, const Model& model, std::span<const int> tokens,
                  const std::vector<bool>& mask) {
  return loss_impl(graph, model, tokens, mask);
}

Tensor forward_logits(const Model& model, std::span<const int> tokens) {
  Graph g;
  auto trace = build_forward(g, model, tokens);
  return g.value(trace.logits);
}

double lm_loss(const Model& model, std::span<const int> tokens, const std::vector<bool>& mask) {
  Graph g;
  return g.value(build_lm_loss(g, model, tokens, mask)).item();
}

double lm_loss(const Model& model, std::span<const int> tokens) {
  return lm_loss(model, tokens, std::vector<bool>(tokens.size(), true));
}

}  // namespace adept
