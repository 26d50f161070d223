// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adept/corpus.hpp"
#include "adept/tensor.hpp"
#include "adept/transformer.hpp"

namespace adept {

struct MCOption {
  std::string label;
  std::string text;
};

struct MCItem {
  std::string question;
  std::vector<MCOption> options;  // 2..26, unique labels
  std::string answer_label;

  void validate() const;
};

/// Maps a token prefix to next-token logits [T, V], one row per position.
using LogitFn = std::function<Tensor(std::span<const int>)>;

LogitFn logits_of(const Model& model);

/// exp of the mean NLL of the option tokens given the question prefix.
/// Question tokens are context only; the question must be non-empty.
double option_ppl(const LogitFn& logits, const ByteTokenizer& tok, std::string_view question,
                  std::string_view option_text);
double option_ppl(const Model& model, std::string_view question, std::string_view option_text);

/// Label of the lowest-perplexity option; earlier options win ties.
std::string mc_predict(const LogitFn& logits, const ByteTokenizer& tok, const MCItem& item);
std::string mc_predict(const Model& model, const MCItem& item);

double accuracy(const LogitFn& logits, const ByteTokenizer& tok, std::span<const MCItem> items);
double accuracy(const Model& model, std::span<const MCItem> items);

/// Mean over documents of each document's masked mean NLL (nats). Documents
/// longer than max_seq_len must be segmented beforehand.
double heldout_loss(const Model& model, const Corpus& corpus);

/// One JSON object per line: {"question": ..., "options": [["A", "text"], ...],
/// "answer": "A"}.
std::vector<MCItem> parse_items_jsonl(std::string_view content);
std::vector<MCItem> load_items_jsonl(const std::filesystem::path& path);
std::string items_to_jsonl(std::span<const MCItem> items);

}  // namespace adept
