// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "adept/corpus.hpp"
#include "adept/random.hpp"
#include "adept/transformer.hpp"

namespace adept::testing {

inline ModelConfig tiny_config(std::size_t n_layers = 2, std::uint64_t seed = 0) {
  return ModelConfig{.n_layers = n_layers, .d_model = 8, .n_heads = 2, .d_ff = 16, .vocab_size = 64,
                     .max_seq_len = 16, .seed = seed, .tie_embeddings = true};
}

inline std::vector<int> random_tokens(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<int> t(n);
  for (auto& x : t) x = static_cast<int>(rng.index(vocab));
  return t;
}

inline Corpus random_corpus(std::size_t docs, std::size_t len, std::size_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  Corpus c;
  for (std::size_t i = 0; i < docs; ++i) {
    Document d;
    d.tokens = random_tokens(rng, len, vocab);
    d.loss_mask.assign(len, true);
    c.documents.push_back(std::move(d));
  }
  return c;
}

/// A model whose layers do real work: residual branches are non-zero, so
/// masking and importance scores differ between layers.
inline Model tiny_model(std::size_t n_layers = 2, std::uint64_t seed = 0) {
  return init_model(tiny_config(n_layers, seed));
}

}  // namespace adept::testing
