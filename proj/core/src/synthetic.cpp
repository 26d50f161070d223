// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/synthetic.hpp"

#include <algorithm>
#include <array>
#include <string_view>

#include "adept/error.hpp"

namespace adept::synthetic {
namespace {

constexpr std::array<std::string_view, 16> kNouns = {"cat",   "dog",    "bird",  "tree",   "house", "river",
                                                     "child", "farmer", "king",  "garden", "horse", "boat",
                                                     "woman", "stone",  "field", "window"};
constexpr std::array<std::string_view, 10> kVerbs = {"sees",   "likes", "finds",   "carries", "follows",
                                                     "paints", "hears", "watches", "keeps",   "leaves"};
constexpr std::array<std::string_view, 10> kAdjectives = {"small", "old",   "green", "quiet", "bright",
                                                          "tall",  "young", "brown", "happy", "cold"};
constexpr std::array<std::string_view, 6> kPrepositions = {"near", "under", "behind", "beside", "over", "past"};

constexpr std::array<std::string_view, 8> kDrugs = {"aspirin",  "insulin",   "heparin", "morphine",
                                                    "warfarin", "ibuprofen", "digoxin", "lisinopril"};
constexpr std::array<std::string_view, 6> kSigns = {"fever", "cough", "rash", "edema", "angina", "nausea"};
constexpr std::array<std::string_view, 4> kSchedules = {"q6h", "q8h", "q12h", "daily"};

constexpr std::array<std::string_view, 21> kNumberNames = {
    "zero",    "one",     "two",     "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",    "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty"};

constexpr std::array<std::string_view, 10> kIngredients = {"flour",  "butter", "sugar", "onion",  "garlic",
                                                           "lemon",  "pepper", "honey", "cream",  "ginger"};
constexpr std::array<std::string_view, 8> kActions = {"stir", "chop", "whisk", "fold", "melt", "toast", "mix", "grate"};
constexpr std::array<std::string_view, 5> kManner = {"slowly", "gently", "briskly", "evenly", "lightly"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
  return words[rng.index(N)];
}

std::uint64_t doc_seed(std::uint64_t seed, std::size_t i) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string noun_phrase(Rng& rng) {
  std::string s = "the ";
  if (rng.uniform() < 0.5) {
    s += pick(rng, kAdjectives);
    s += ' ';
  }
  s += pick(rng, kNouns);
  return s;
}

std::string equation(Rng& rng) {
  const int a = static_cast<int>(rng.index(20));
  const int b = static_cast<int>(rng.index(20));
  switch (rng.index(3)) {
    case 0: return std::to_string(a) + "+" + std::to_string(b) + "=" + std::to_string(a + b);
    case 1: {
      const int hi = std::max(a, b), lo = std::min(a, b);
      return std::to_string(hi) + "-" + std::to_string(lo) + "=" + std::to_string(hi - lo);
    }
    default: {
      const int x = a % 10, y = b % 10;
      return std::to_string(x) + "*" + std::to_string(y) + "=" + std::to_string(x * y);
    }
  }
}

std::string word_equation(Rng& rng) {
  const std::size_t a = rng.index(11), b = rng.index(11);
  if (rng.uniform() < 0.5) {
    return std::string(kNumberNames[a]) + " plus " + std::string(kNumberNames[b]) + " is " +
           std::string(kNumberNames[a + b]) + ".";
  }
  const std::size_t hi = std::max(a, b), lo = std::min(a, b);
  return std::string(kNumberNames[hi]) + " minus " + std::string(kNumberNames[lo]) + " is " +
         std::string(kNumberNames[hi - lo]) + ".";
}

std::string recipe_step(Rng& rng) {
  std::string s(pick(rng, kActions));
  s += " the ";
  s += pick(rng, kIngredients);
  s += " into the ";
  s += pick(rng, kIngredients);
  s += ' ';
  s += pick(rng, kManner);
  s += '.';
  return s;
}

std::string clinical_note(Rng& rng) {
  std::string s = "pt with ";
  s += pick(rng, kSigns);
  s += ", give ";
  s += pick(rng, kDrugs);
  s += ' ' + std::to_string(5 * (1 + rng.index(40))) + " mg ";
  s += pick(rng, kSchedules);
  s += "; temp " + std::to_string(36 + rng.index(4)) + "." + std::to_string(rng.index(10));
  s += ", hr " + std::to_string(60 + rng.index(60)) + ".";
  return s;
}

}  // namespace

Domain parse_domain(const std::string& name) {
  if (name == "general") return Domain::kGeneral;
  if (name == "arithmetic") return Domain::kArithmetic;
  if (name == "clinical") return Domain::kClinical;
  if (name == "number_words") return Domain::kNumberWords;
  if (name == "kitchen") return Domain::kKitchen;
  throw ConfigError("unknown synthetic domain '" + name +
                    "' (expected general, arithmetic, clinical, number_words or kitchen)");
}

const char* domain_name(Domain d) {
  switch (d) {
    case Domain::kGeneral: return "general";
    case Domain::kArithmetic: return "arithmetic";
    case Domain::kClinical: return "clinical";
    case Domain::kNumberWords: return "number_words";
    case Domain::kKitchen: return "kitchen";
  }
  return "?";
}

std::string general_sentence(Rng& rng) {
  std::string s = noun_phrase(rng);
  s += ' ';
  s += pick(rng, kVerbs);
  s += ' ';
  s += noun_phrase(rng);
  if (rng.uniform() < 0.6) {
    s += ' ';
    s += pick(rng, kPrepositions);
    s += ' ';
    s += noun_phrase(rng);
  }
  s += '.';
  return s;
}

std::string document_text(Domain domain, std::uint64_t seed) {
  Rng rng(seed);
  std::string text;
  switch (domain) {
    case Domain::kGeneral: {
      const std::size_t n = 3 + rng.index(3);
      for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + general_sentence(rng);
      break;
    }
    case Domain::kArithmetic: {
      const std::size_t n = 8 + rng.index(6);
      for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + equation(rng) + ".";
      break;
    }
    case Domain::kClinical: {
      const std::size_t n = 2 + rng.index(2);
      for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + clinical_note(rng);
      break;
    }
    case Domain::kNumberWords: {
      const std::size_t n = 4 + rng.index(3);
      for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + word_equation(rng);
      break;
    }
    case Domain::kKitchen: {
      const std::size_t n = 3 + rng.index(3);
      for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + recipe_step(rng);
      break;
    }
  }
  return text;
}

std::vector<std::string> documents(Domain domain, std::size_t count, std::uint64_t seed) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(document_text(domain, doc_seed(seed, i)));
  return out;
}

Corpus corpus(Domain domain, std::size_t count, std::uint64_t seed, const ByteTokenizer& tok) {
  Corpus c;
  c.kind = DocKind::kPretrain;
  c.language_tag = domain_name(domain);
  for (const auto& text : documents(domain, count, seed)) {
    Document d = build_pretrain_document(tok, text);
    d.language_tag = c.language_tag;
    c.documents.push_back(std::move(d));
  }
  return c;
}

Corpus general_probe(std::size_t count, std::uint64_t seed, const ByteTokenizer& tok) {
  Corpus c;
  c.kind = DocKind::kProbe;
  c.language_tag = "general";
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(doc_seed(seed ^ 0x70726f6265ULL, i));
    Document d;
    if (i % 2 == 0) {
      d = build_pretrain_probe(tok, general_sentence(rng) + " " + general_sentence(rng));
    } else {
      // Cloze: the object noun phrase is the answer.
      std::string prompt = noun_phrase(rng) + " " + std::string(pick(rng, kVerbs)) + " ";
      d = build_probe_example(tok, prompt, noun_phrase(rng) + ".");
    }
    d.language_tag = c.language_tag;
    c.documents.push_back(std::move(d));
  }
  return c;
}

std::vector<MCItem> mc_items(Domain domain, std::size_t count, std::uint64_t seed) {
  static constexpr std::array<const char*, 4> kLabels = {"A", "B", "C", "D"};
  std::vector<MCItem> items;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(doc_seed(seed ^ 0x6d63ULL, i));
    MCItem item;
    std::string correct;
    std::vector<std::string> wrong;
    switch (domain) {
      case Domain::kArithmetic: {
        const int a = static_cast<int>(rng.index(10)), b = static_cast<int>(rng.index(10));
        item.question = std::to_string(a) + "+" + std::to_string(b) + "=";
        correct = std::to_string(a + b) + ".";
        for (int off : {1, -1, 2}) wrong.push_back(std::to_string(a + b + off < 0 ? a + b + 3 : a + b + off) + ".");
        break;
      }
      case Domain::kGeneral: {
        item.question = noun_phrase(rng);
        const std::string verb(pick(rng, kVerbs));
        const std::string obj = noun_phrase(rng);
        correct = " " + verb + " " + obj + ".";
        wrong = {" " + obj + " " + verb + ".", " " + verb + " " + verb + ".", " . " + obj + " " + verb};
        break;
      }
      case Domain::kNumberWords: {
        const std::size_t a = rng.index(11), b = rng.index(10);
        item.question = std::string(kNumberNames[a]) + " plus " + std::string(kNumberNames[b]) + " is";
        correct = " " + std::string(kNumberNames[a + b]) + ".";
        for (std::size_t off : {1, 2, 3}) wrong.push_back(" " + std::string(kNumberNames[(a + b + off) % 21]) + ".");
        break;
      }
      case Domain::kKitchen: {
        const std::string action(pick(rng, kActions));
        const std::string first(pick(rng, kIngredients));
        item.question = action + " the " + first;
        const std::string second(pick(rng, kIngredients));
        correct = " into the " + second + ".";
        wrong = {" the into " + second + ".", " into " + second + " the.", " " + second + " into the."};
        break;
      }
      case Domain::kClinical: {
        const std::string drug(pick(rng, kDrugs));
        item.question = "pt with " + std::string(pick(rng, kSigns)) + ", give " + drug + " ";
        const std::string dose = std::to_string(5 * (1 + rng.index(40)));
        correct = dose + " mg daily;";
        wrong = {dose + " daily mg;", "mg " + dose + " daily;", drug + " mg daily;"};
        break;
      }
    }
    const std::size_t answer_slot = rng.index(4);
    std::size_t w = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      item.options.push_back({kLabels[k], k == answer_slot ? correct : wrong[w++]});
    }
    item.answer_label = kLabels[answer_slot];
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace adept::synthetic
