// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "adept/expansion.hpp"
#include "adept/importance.hpp"
#include "adept/random.hpp"
#include "adept/trainer.hpp"
#include "adept/transformer.hpp"

namespace {

using namespace adept;

// Same shape as the forgetting experiment's model.
ModelConfig bench_config(std::size_t layers) {
  return ModelConfig{.n_layers = layers, .d_model = 64, .n_heads = 4, .d_ff = 128, .vocab_size = 259,
                     .max_seq_len = 48, .seed = 1, .tie_embeddings = true};
}

Document random_doc(Rng& rng, std::size_t len) {
  Document d;
  for (std::size_t i = 0; i < len; ++i) d.tokens.push_back(static_cast<int>(rng.index(259)));
  d.loss_mask.assign(len, true);
  return d;
}

void BM_Forward(benchmark::State& state) {
  const Model m = init_model(bench_config(static_cast<std::size_t>(state.range(0))));
  Rng rng(3);
  const Document d = random_doc(rng, 48);
  for (auto _ : state) benchmark::DoNotOptimize(forward_logits(m, d.tokens));
  state.SetItemsProcessed(state.iterations() * 48);
}
BENCHMARK(BM_Forward)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  Model m = init_model(bench_config(static_cast<std::size_t>(state.range(0))));
  Rng rng(3);
  std::vector<Document> docs;
  for (int i = 0; i < 4; ++i) docs.push_back(random_doc(rng, 48));
  std::vector<const Document*> batch;
  for (const auto& d : docs) batch.push_back(&d);
  for (auto _ : state) {
    m.zero_grad();
    benchmark::DoNotOptimize(accumulate_mean_loss_gradient(m, batch));
  }
  state.SetItemsProcessed(state.iterations() * 4 * 48);
}
BENCHMARK(BM_ForwardBackward)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_MaskingProbe(benchmark::State& state) {
  const Model m = init_model(bench_config(6));
  Rng rng(4);
  Corpus c;
  for (int i = 0; i < 8; ++i) c.documents.push_back(random_doc(rng, 48));
  for (auto _ : state) benchmark::DoNotOptimize(layer_importance_masking(m, c));
}
BENCHMARK(BM_MaskingProbe)->Unit(benchmark::kMillisecond);

void BM_Expand(benchmark::State& state) {
  const Model m = init_model(bench_config(6));
  const auto plan = plan_uniform(6, 2, ExpansionStrategy::kUniform);
  for (auto _ : state) benchmark::DoNotOptimize(expand(m, plan));
}
BENCHMARK(BM_Expand)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
