// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adept/corpus.hpp"
#include "adept/evaluation.hpp"
#include "adept/random.hpp"

namespace adept::synthetic {

// Seeded stand-ins for a general corpus and two target domains. Each
// generator is a pure function of (count, seed).

enum class Domain : std::uint8_t {
  kGeneral,     // digit-free English-like sentences from a small grammar
  kArithmetic,  // chains of small-integer equations, e.g. "7+5=12. 3*4=12."
  kClinical,    // templated dosage / vital-sign notes
  kNumberWords,  // spelled-out equations over the general alphabet, "three plus four is seven."
  kKitchen,      // recipe steps over the general alphabet with a disjoint word list
};

Domain parse_domain(const std::string& name);
const char* domain_name(Domain d);

std::string general_sentence(Rng& rng);
std::string document_text(Domain domain, std::uint64_t seed);
std::vector<std::string> documents(Domain domain, std::size_t count, std::uint64_t seed);

/// Pretrain-kind corpus of `count` documents tagged with the domain name.
Corpus corpus(Domain domain, std::size_t count, std::uint64_t seed, const ByteTokenizer& tok = ByteTokenizer());

/// Probe corpus: pretrain-style general text (all tokens are targets) mixed
/// with prompt/answer general cloze items (answer tokens only).
Corpus general_probe(std::size_t count, std::uint64_t seed, const ByteTokenizer& tok = ByteTokenizer());

/// Four-option multiple-choice items for a domain.
std::vector<MCItem> mc_items(Domain domain, std::size_t count, std::uint64_t seed);

}  // namespace adept::synthetic
