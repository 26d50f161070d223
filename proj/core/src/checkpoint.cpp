// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "adept/error.hpp"

namespace adept {
namespace fs = std::filesystem;
using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"n_layers", c.n_layers},       {"d_model", c.d_model},
              {"n_heads", c.n_heads},         {"d_ff", c.d_ff},
              {"vocab_size", c.vocab_size},   {"max_seq_len", c.max_seq_len},
              {"seed", c.seed},               {"tie_embeddings", c.tie_embeddings}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.n_layers = j.value("n_layers", c.n_layers);
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_ff = j.value("d_ff", c.d_ff);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.seed = j.value("seed", c.seed);
    c.tie_embeddings = j.value("tie_embeddings", c.tie_embeddings);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw ConfigError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::pair<std::string, const Tensor*>> named_tensors(const Model& m) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.emplace_back("token_embedding", &m.token_embedding);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    for (Unit u : kAllUnits) {
      out.emplace_back("layers." + std::to_string(l) + "." + std::string(unit_name(u)), &m.layers[l].unit(u));
    }
  }
  out.emplace_back("final_norm", &m.final_norm);
  if (m.lm_head.size() > 0) out.emplace_back("lm_head", &m.lm_head);
  return out;
}

void append_f32(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double read_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

void save_checkpoint(const Model& model, const fs::path& path) {
  json header;
  header["format"] = "adept-checkpoint";
  header["version"] = kCheckpointFormatVersion;
  header["dtype"] = "f32le";
  header["config"] = config_to_json(model.config);
  header["shared_frozen"] = model.shared_frozen();
  json layers = json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"origin", l.is_expanded() ? "expanded" : "original"},
                      {"source", l.source()},
                      {"frozen", l.frozen()}});
  }
  header["layers"] = layers;
  json tensors = json::array();
  const auto named = named_tensors(model);
  for (const auto& [name, t] : named) tensors.push_back({{"name", name}, {"shape", t->shape()}});
  header["tensors"] = tensors;

  std::string bytes = header.dump();
  bytes.push_back('\n');
  for (const auto& [name, t] : named) {
    for (double v : t->data()) append_f32(bytes, v);
  }
  write_file_atomic(path, bytes);
}

Model load_checkpoint(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw ConfigError(path.string() + ": missing checkpoint header");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": bad checkpoint header: " + e.what());
  }
  if (header.value("format", "") != "adept-checkpoint" || header.value("version", 0) != kCheckpointFormatVersion) {
    throw ConfigError(path.string() + ": unsupported checkpoint format");
  }
  Model m;
  m.config = config_from_json(header.at("config"));
  m.token_embedding = Tensor({m.config.vocab_size, m.config.d_model});
  for (const auto& lj : header.at("layers")) {
    Layer layer(m.config);
    if (lj.at("origin") == "expanded") layer.mark_copy_of(lj.at("source").get<int>());
    layer.set_frozen(lj.at("frozen").get<bool>());
    m.layers.push_back(std::move(layer));
  }
  m.final_norm = Tensor({m.config.d_model});
  if (!m.config.tie_embeddings) m.lm_head = Tensor({m.config.vocab_size, m.config.d_model});
  m.set_shared_frozen(header.value("shared_frozen", false));

  auto named = named_tensors(m);
  const auto& listed = header.at("tensors");
  if (listed.size() != named.size()) throw ConfigError(path.string() + ": tensor count mismatch");
  std::size_t offset = nl + 1;
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto* t = const_cast<Tensor*>(named[i].second);
    if (listed[i].at("name") != named[i].first || listed[i].at("shape").get<Shape>() != t->shape()) {
      throw ConfigError(path.string() + ": tensor " + named[i].first + " does not match header");
    }
    if (offset + 4 * t->size() > bytes.size()) throw ConfigError(path.string() + ": truncated tensor data");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
    for (std::size_t k = 0; k < t->size(); ++k) t->data()[k] = read_f32(p + 4 * k);
    offset += 4 * t->size();
  }
  if (offset != bytes.size()) throw ConfigError(path.string() + ": trailing bytes after tensor data");
  return m;
}

}  // namespace adept
