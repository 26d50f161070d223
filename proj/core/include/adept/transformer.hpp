// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adept/graph.hpp"
#include "adept/tensor.hpp"

namespace adept {

struct ModelConfig {
  std::size_t n_layers = 2;
  std::size_t d_model = 8;
  std::size_t n_heads = 2;
  std::size_t d_ff = 16;
  std::size_t vocab_size = 259;
  std::size_t max_seq_len = 64;
  std::uint64_t seed = 0;
  bool tie_embeddings = true;

  /// Throws ConfigError naming every violated constraint.
  void validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// The nine per-layer parameter units. Every per-layer tensor belongs to
/// exactly one of them.
enum class Unit : std::uint8_t {
  kQProj,
  kKProj,
  kVProj,
  kOProj,
  kGateProj,
  kUpProj,
  kDownProj,
  kInputLayernorm,
  kPostAttentionLayernorm,
};

inline constexpr std::size_t kNumUnits = 9;
inline constexpr std::array<Unit, kNumUnits> kAllUnits = {
    Unit::kQProj,    Unit::kKProj,  Unit::kVProj,    Unit::kOProj,          Unit::kGateProj,
    Unit::kUpProj,   Unit::kDownProj, Unit::kInputLayernorm, Unit::kPostAttentionLayernorm,
};

std::string_view unit_name(Unit u);
/// Accepts the snake_case names produced by unit_name().
std::optional<Unit> parse_unit(std::string_view name);
Shape unit_shape(const ModelConfig& config, Unit u);

enum class LayerOrigin : std::uint8_t { kOriginal, kExpandedCopy };

class Layer {
 public:
  Layer() = default;
  explicit Layer(const ModelConfig& config);

  Tensor& unit(Unit u) { return units_[static_cast<std::size_t>(u)]; }
  const Tensor& unit(Unit u) const { return units_[static_cast<std::size_t>(u)]; }

  LayerOrigin origin() const { return origin_; }
  /// Original-model index this layer was copied from; -1 for originals.
  int source() const { return source_; }
  bool is_expanded() const { return origin_ == LayerOrigin::kExpandedCopy; }
  void mark_copy_of(int source_layer);

  bool frozen() const { return frozen_; }
  /// Frozen layers carry no gradient buffers.
  void set_frozen(bool frozen);

  bool masked() const { return masked_; }
  void set_masked(bool masked) { masked_ = masked; }

  std::size_t parameter_count() const;

  friend bool operator==(const Layer&, const Layer&) = default;

 private:
  std::array<Tensor, kNumUnits> units_;
  LayerOrigin origin_ = LayerOrigin::kOriginal;
  int source_ = -1;
  bool frozen_ = false;
  bool masked_ = false;
};

/// Pre-norm decoder-only transformer: RMS-norm, rotary causal attention,
/// SwiGLU feed-forward, optionally tied input/output embeddings.
struct Model {
  ModelConfig config;
  Tensor token_embedding;  // [vocab, d_model]
  std::vector<Layer> layers;
  Tensor final_norm;       // [d_model]
  Tensor lm_head;          // [vocab, d_model]; empty when embeddings are tied

  std::size_t n_expanded() const;
  std::size_t parameter_count() const;
  std::size_t trainable_parameter_count() const;

  /// Embedding, untied head and final norm.
  void set_shared_frozen(bool frozen);
  bool shared_frozen() const { return !token_embedding.requires_grad(); }
  void set_all_frozen(bool frozen);
  void zero_grad();
  void clear_masks();

  /// Every tensor of the model in canonical order (embedding, layers in order
  /// and units in kAllUnits order, final norm, head).
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;

  friend bool operator==(const Model& a, const Model& b);
};

Model init_model(const ModelConfig& config);

/// Handle to the parameters of one (layer, unit) pair.
Tensor& unit_view(Model& model, std::size_t layer, Unit unit);
const Tensor& unit_view(const Model& model, std::size_t layer, Unit unit);

struct ForwardTrace {
  Var logits;                       // [T, vocab]
  std::vector<Var> layer_outputs;   // residual stream after each layer
  Var embedded;                     // residual stream entering layer 0
};

/// Records the forward pass on `graph`. Binding a mutable model routes
/// gradients into tensors that require grad; a const model is read-only.
ForwardTrace build_forward(Graph& graph, Model& model, std::span<const int> tokens);
ForwardTrace build_forward(Graph& graph, const Model& model, std::span<const int> tokens);

/// Next-token loss node over targets tokens[1..]; mask[t] selects whether
/// token t counts as a target (mask[0] is ignored).
Var build_lm_loss(Graph& graph, Model& model, std::span<const int> tokens, const std::vector<bool>& mask);
Var build_lm_loss(Graph& graph, const Model& model, std::span<const int> tokens,
                  const std::vector<bool>& mask);

Tensor forward_logits(const Model& model, std::span<const int> tokens);
double lm_loss(const Model& model, std::span<const int> tokens, const std::vector<bool>& mask);
double lm_loss(const Model& model, std::span<const int> tokens);

/// Throws ConfigError when the sequence is too long or holds an id outside
/// the vocabulary (naming the position).
void check_tokens(const ModelConfig& config, std::span<const int> tokens);

}  // namespace adept
