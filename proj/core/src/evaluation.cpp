// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "adept/checkpoint.hpp"
#include "adept/error.hpp"

namespace adept {

void MCItem::validate() const {
  if (options.size() < 2 || options.size() > 26) {
    throw ConfigError("item must have 2-26 options, has " + std::to_string(options.size()));
  }
  std::set<std::string> labels;
  for (const auto& o : options) {
    if (!labels.insert(o.label).second) throw ConfigError("duplicate option label '" + o.label + "'");
    if (o.text.empty()) throw ConfigError("option '" + o.label + "' has empty text");
  }
  if (!labels.contains(answer_label)) throw ConfigError("answer label '" + answer_label + "' is not an option");
}

LogitFn logits_of(const Model& model) {
  return [&model](std::span<const int> tokens) { return forward_logits(model, tokens); };
}

double option_ppl(const LogitFn& logits, const ByteTokenizer& tok, std::string_view question,
                  std::string_view option_text) {
  if (question.empty()) throw ConfigError("option perplexity needs a non-empty question");
  if (option_text.empty()) throw ConfigError("option perplexity needs a non-empty option");
  std::vector<int> tokens = tok.tokenize(question);
  const std::size_t q_len = tokens.size();
  const auto opt = tok.tokenize(option_text);
  tokens.insert(tokens.end(), opt.begin(), opt.end());

  const Tensor z = logits(std::span<const int>(tokens).first(tokens.size() - 1));
  const std::size_t V = z.dim(1);
  double nll = 0.0;
  for (std::size_t t = q_len; t < tokens.size(); ++t) {
    const double* row = z.data().data() + (t - 1) * V;
    const double mx = *std::max_element(row, row + V);
    double se = 0.0;
    for (std::size_t j = 0; j < V; ++j) se += std::exp(row[j] - mx);
    nll += mx + std::log(se) - row[tokens[t]];
  }
  return std::exp(nll / static_cast<double>(opt.size()));
}

double option_ppl(const Model& model, std::string_view question, std::string_view option_text) {
  const std::size_t total = question.size() + option_text.size();
  if (total > model.config.max_seq_len) {
    throw ConfigError("question + option length " + std::to_string(total) + " exceeds max_seq_len " +
                      std::to_string(model.config.max_seq_len));
  }
  return option_ppl(logits_of(model), ByteTokenizer(model.config.vocab_size), question, option_text);
}

std::string mc_predict(const LogitFn& logits, const ByteTokenizer& tok, const MCItem& item) {
  item.validate();
  std::size_t best = 0;
  double best_ppl = 0.0;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    const double ppl = option_ppl(logits, tok, item.question, item.options[i].text);
    if (i == 0 || ppl < best_ppl) {
      best = i;
      best_ppl = ppl;
    }
  }
  return item.options[best].label;
}

std::string mc_predict(const Model& model, const MCItem& item) {
  for (const auto& o : item.options) {
    if (item.question.size() + o.text.size() > model.config.max_seq_len) {
      throw ConfigError("item '" + item.question + "' option " + o.label + " exceeds max_seq_len");
    }
  }
  return mc_predict(logits_of(model), ByteTokenizer(model.config.vocab_size), item);
}

double accuracy(const LogitFn& logits, const ByteTokenizer& tok, std::span<const MCItem> items) {
  if (items.empty()) throw ConfigError("accuracy over an empty item set");
  std::size_t correct = 0;
  for (const auto& item : items) correct += mc_predict(logits, tok, item) == item.answer_label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

double accuracy(const Model& model, std::span<const MCItem> items) {
  if (items.empty()) throw ConfigError("accuracy over an empty item set");
  std::size_t correct = 0;
  for (const auto& item : items) correct += mc_predict(model, item) == item.answer_label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

double heldout_loss(const Model& model, const Corpus& corpus) {
  if (corpus.empty()) throw ConfigError("held-out loss over an empty corpus");
  double total = 0.0;
  for (const auto& doc : corpus.documents) total += lm_loss(model, doc.tokens, doc.loss_mask);
  return total / static_cast<double>(corpus.size());
}

std::vector<MCItem> parse_items_jsonl(std::string_view content) {
  using nlohmann::json;
  std::vector<MCItem> items;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      MCItem item;
      item.question = j.at("question").get<std::string>();
      for (const auto& o : j.at("options")) item.options.push_back({o.at(0).get<std::string>(), o.at(1).get<std::string>()});
      item.answer_label = j.at("answer").get<std::string>();
      item.validate();
      items.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw ConfigError("items line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

std::vector<MCItem> load_items_jsonl(const std::filesystem::path& path) { return parse_items_jsonl(read_file(path)); }

std::string items_to_jsonl(std::span<const MCItem> items) {
  using nlohmann::json;
  std::string out;
  for (const auto& item : items) {
    json options = json::array();
    for (const auto& o : item.options) options.push_back({o.label, o.text});
    out += json{{"question", item.question}, {"options", options}, {"answer", item.answer_label}}.dump() + "\n";
  }
  return out;
}

}  // namespace adept
