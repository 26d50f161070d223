// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adept {

enum class DocKind : std::uint8_t { kPretrain, kSft, kProbe };

std::string_view doc_kind_name(DocKind k);
DocKind parse_doc_kind(std::string_view name);

/// One training or probing sequence. loss_mask[t] marks token t as a
/// contributing target; it always has the same length as tokens.
struct Document {
  std::vector<int> tokens;
  std::vector<bool> loss_mask;
  DocKind kind = DocKind::kPretrain;
  std::string language_tag;
};

using ProbeExample = Document;

struct Corpus {
  std::vector<Document> documents;
  DocKind kind = DocKind::kPretrain;
  std::string language_tag;

  bool empty() const { return documents.empty(); }
  std::size_t size() const { return documents.size(); }
  /// Throws ConfigError if any token is outside [0, vocab_size).
  void validate(std::size_t vocab_size) const;
  /// FNV-1a over tokens and masks; identifies the corpus in reports.
  std::string content_hash() const;
};

/// Reversible byte-level tokenizer: byte b maps to id b. Ids 256..258 are
/// reserved for pad / bos / eos when the vocabulary has room for them.
class ByteTokenizer {
 public:
  static constexpr int kPad = 256;
  static constexpr int kBos = 257;
  static constexpr int kEos = 258;
  static constexpr std::size_t kDefaultVocab = 259;

  explicit ByteTokenizer(std::size_t vocab_size = kDefaultVocab) : vocab_size_(vocab_size) {}

  std::size_t vocab_size() const { return vocab_size_; }
  /// In a vocabulary smaller than 256, a byte >= vocab_size is an error.
  std::vector<int> tokenize(std::string_view text) const;
  /// Special ids are dropped; anything else outside [0, 256) is an error.
  std::string detokenize(std::span<const int> tokens) const;

 private:
  std::size_t vocab_size_;
};

struct Segment {
  std::vector<int> tokens;
  std::size_t source_doc = 0;
  std::size_t start_offset = 0;
};

/// Overlapping windows: a sequence that fits is one segment; otherwise
/// ceil((L - overlap) / stride) segments starting at multiples of stride,
/// each ending at min(start + window, L). Requires stride == window - overlap
/// and 0 < overlap < window.
std::vector<Segment> segment_sliding_window(std::span<const int> tokens, std::size_t window,
                                            std::size_t stride, std::size_t overlap,
                                            std::size_t source_doc = 0);

struct WindowConfig {
  std::size_t window = 256;
  std::size_t stride = 192;
  std::size_t overlap = 64;
};

/// Splits every document into windows, slicing its loss mask alongside.
Corpus segment_corpus(const Corpus& corpus, const WindowConfig& cfg);

/// question, analysis and answer joined by single newlines; an empty
/// analysis is skipped together with its separator.
Document build_sft_example(const ByteTokenizer& tok, std::string_view question, std::string_view analysis,
                           std::string_view answer);

/// prompt followed by answer; only the answer tokens are targets.
ProbeExample build_probe_example(const ByteTokenizer& tok, std::string_view prompt, std::string_view answer);

/// Pretrain-style probe text: every token is a target.
ProbeExample build_pretrain_probe(const ByteTokenizer& tok, std::string_view text);

Document build_pretrain_document(const ByteTokenizer& tok, std::string_view text);

/// Stable reorder: pretrain, then SFT, then probe documents; within a kind,
/// language tags in order of first appearance.
void organize_corpus(Corpus& corpus);

/// One JSON object per line: {"kind": "pretrain", "text": ...},
/// {"kind": "sft", "question", "analysis", "answer"}, {"kind": "probe",
/// "prompt", "answer"} or {"kind": "probe", "text"}; optional
/// "language_tag". Blank lines are skipped.
Corpus parse_corpus_jsonl(std::string_view content, const ByteTokenizer& tok);
Corpus load_corpus_jsonl(const std::filesystem::path& path, const ByteTokenizer& tok);

}  // namespace adept
