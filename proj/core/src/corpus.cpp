// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/corpus.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "adept/checkpoint.hpp"
#include "adept/error.hpp"

namespace adept {

std::string_view doc_kind_name(DocKind k) {
  switch (k) {
    case DocKind::kPretrain: return "pretrain";
    case DocKind::kSft: return "sft";
    case DocKind::kProbe: return "probe";
  }
  return "?";
}

DocKind parse_doc_kind(std::string_view name) {
  if (name == "pretrain") return DocKind::kPretrain;
  if (name == "sft") return DocKind::kSft;
  if (name == "probe") return DocKind::kProbe;
  throw ConfigError("unknown document kind '" + std::string(name) + "'");
}

void Corpus::validate(std::size_t vocab_size) const {
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const auto& doc = documents[d];
    if (doc.loss_mask.size() != doc.tokens.size()) {
      throw InvariantError("document " + std::to_string(d) + " mask/token length mismatch");
    }
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (doc.tokens[i] < 0 || static_cast<std::size_t>(doc.tokens[i]) >= vocab_size) {
        throw ConfigError("document " + std::to_string(d) + " token " + std::to_string(doc.tokens[i]) +
                          " at position " + std::to_string(i) + " outside vocab of " + std::to_string(vocab_size));
      }
    }
  }
}

std::string Corpus::content_hash() const {
  std::uint64_t h = fnv1a64("corpus");
  for (const auto& doc : documents) {
    std::string buf;
    buf.reserve(doc.tokens.size() * 5 + 1);
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      const auto t = static_cast<std::uint32_t>(doc.tokens[i]);
      for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((t >> (8 * b)) & 0xffu));
      buf.push_back(doc.loss_mask[i] ? '\1' : '\0');
    }
    buf.push_back('|');
    h = fnv1a64(buf, h);
  }
  return hash_hex(h);
}

std::vector<int> ByteTokenizer::tokenize(std::string_view text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const int id = static_cast<unsigned char>(text[i]);
    if (static_cast<std::size_t>(id) >= vocab_size_) {
      throw ConfigError("byte " + std::to_string(id) + " at offset " + std::to_string(i) +
                        " exceeds constrained vocab of " + std::to_string(vocab_size_));
    }
    out.push_back(id);
  }
  return out;
}

std::string ByteTokenizer::detokenize(std::span<const int> tokens) const {
  std::string out;
  out.reserve(tokens.size());
  for (int t : tokens) {
    if (t == kPad || t == kBos || t == kEos) continue;
    if (t < 0 || t > 255) throw ConfigError("token " + std::to_string(t) + " is not a byte");
    out.push_back(static_cast<char>(static_cast<unsigned char>(t)));
  }
  return out;
}

std::vector<Segment> segment_sliding_window(std::span<const int> tokens, std::size_t window, std::size_t stride,
                                            std::size_t overlap, std::size_t source_doc) {
  if (overlap == 0 || overlap >= window) {
    throw ConfigError("overlap must satisfy 0 < overlap < window (got " + std::to_string(overlap) + ", window " +
                      std::to_string(window) + ")");
  }
  if (stride != window - overlap) {
    throw ConfigError("stride " + std::to_string(stride) + " != window - overlap (" +
                      std::to_string(window - overlap) + ")");
  }
  const std::size_t L = tokens.size();
  std::vector<Segment> out;
  if (L <= window) {
    out.push_back({std::vector<int>(tokens.begin(), tokens.end()), source_doc, 0});
    return out;
  }
  const std::size_t K = (L - overlap + stride - 1) / stride;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t start = k * stride;
    const std::size_t end = std::min(start + window, L);
    out.push_back({std::vector<int>(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                    tokens.begin() + static_cast<std::ptrdiff_t>(end)),
                   source_doc, start});
  }
  return out;
}

Corpus segment_corpus(const Corpus& corpus, const WindowConfig& cfg) {
  Corpus out;
  out.kind = corpus.kind;
  out.language_tag = corpus.language_tag;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const auto& doc = corpus.documents[d];
    for (auto& seg : segment_sliding_window(doc.tokens, cfg.window, cfg.stride, cfg.overlap, d)) {
      Document piece;
      piece.kind = doc.kind;
      piece.language_tag = doc.language_tag;
      const auto begin = doc.loss_mask.begin() + static_cast<std::ptrdiff_t>(seg.start_offset);
      piece.loss_mask.assign(begin, begin + static_cast<std::ptrdiff_t>(seg.tokens.size()));
      piece.tokens = std::move(seg.tokens);
      // A window whose only targets sit at position 0 contributes no loss.
      if (std::find(piece.loss_mask.begin() + 1, piece.loss_mask.end(), true) == piece.loss_mask.end()) continue;
      out.documents.push_back(std::move(piece));
    }
  }
  return out;
}

Document build_pretrain_document(const ByteTokenizer& tok, std::string_view text) {
  Document d;
  d.tokens = tok.tokenize(text);
  d.loss_mask.assign(d.tokens.size(), true);
  d.kind = DocKind::kPretrain;
  return d;
}

Document build_sft_example(const ByteTokenizer& tok, std::string_view question, std::string_view analysis,
                           std::string_view answer) {
  std::string text(question);
  if (!analysis.empty()) {
    text += '\n';
    text += analysis;
  }
  text += '\n';
  text += answer;
  Document d = build_pretrain_document(tok, text);
  d.kind = DocKind::kSft;
  return d;
}

ProbeExample build_probe_example(const ByteTokenizer& tok, std::string_view prompt, std::string_view answer) {
  if (answer.empty()) throw ConfigError("probe example needs a non-empty answer");
  ProbeExample ex;
  ex.kind = DocKind::kProbe;
  ex.tokens = tok.tokenize(prompt);
  const std::size_t prompt_len = ex.tokens.size();
  const auto ans = tok.tokenize(answer);
  ex.tokens.insert(ex.tokens.end(), ans.begin(), ans.end());
  ex.loss_mask.assign(ex.tokens.size(), false);
  std::fill(ex.loss_mask.begin() + static_cast<std::ptrdiff_t>(prompt_len), ex.loss_mask.end(), true);
  return ex;
}

ProbeExample build_pretrain_probe(const ByteTokenizer& tok, std::string_view text) {
  ProbeExample ex = build_pretrain_document(tok, text);
  ex.kind = DocKind::kProbe;
  return ex;
}

void organize_corpus(Corpus& corpus) {
  std::map<std::string, std::size_t> tag_order;
  for (const auto& d : corpus.documents) tag_order.emplace(d.language_tag, tag_order.size());
  std::stable_sort(corpus.documents.begin(), corpus.documents.end(), [&](const Document& a, const Document& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return tag_order.at(a.language_tag) < tag_order.at(b.language_tag);
  });
}

Corpus parse_corpus_jsonl(std::string_view content, const ByteTokenizer& tok) {
  using nlohmann::json;
  Corpus corpus;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "corpus line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
    auto field = [&](const char* key) -> std::string {
      if (!j.contains(key) || !j[key].is_string()) throw ConfigError(where + ": missing string field '" + key + "'");
      return j[key].get<std::string>();
    };
    const DocKind kind = parse_doc_kind(j.value("kind", "pretrain"));
    Document doc;
    switch (kind) {
      case DocKind::kPretrain: doc = build_pretrain_document(tok, field("text")); break;
      case DocKind::kSft: doc = build_sft_example(tok, field("question"), j.value("analysis", ""), field("answer")); break;
      case DocKind::kProbe:
        doc = j.contains("text") ? build_pretrain_probe(tok, field("text"))
                                 : build_probe_example(tok, field("prompt"), field("answer"));
        break;
    }
    doc.language_tag = j.value("language_tag", "");
    if (doc.tokens.empty()) throw ConfigError(where + ": empty document");
    if (first) {
      corpus.kind = kind;
      corpus.language_tag = doc.language_tag;
      first = false;
    }
    corpus.documents.push_back(std::move(doc));
  }
  organize_corpus(corpus);
  return corpus;
}

Corpus load_corpus_jsonl(const std::filesystem::path& path, const ByteTokenizer& tok) {
  return parse_corpus_jsonl(read_file(path), tok);
}

}  // namespace adept
