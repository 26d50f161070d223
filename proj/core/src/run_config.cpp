// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "adept/run_config.hpp"

#include <cstdlib>

#include "adept/checkpoint.hpp"
#include "adept/error.hpp"

namespace adept {
namespace {

std::filesystem::path resolve(const nlohmann::json& j, const char* key, const std::filesystem::path& base) {
  if (!j.contains(key)) return {};
  std::filesystem::path p = j.at(key).get<std::string>();
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (expansion.k > model.n_layers) {
    throw ConfigError("expansion k=" + std::to_string(expansion.k) + " exceeds " + std::to_string(model.n_layers) +
                      " layers");
  }
  if (window.stride + window.overlap != window.window || window.overlap == 0 || window.window > model.max_seq_len) {
    throw ConfigError("window must satisfy stride + overlap == window, overlap > 0 and window <= max_seq_len");
  }
  for (const auto* p : {&paths.train_corpus, &paths.probe_corpus, &paths.general_eval, &paths.target_eval}) {
    if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("file not found: " + p->string());
  }
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    const std::string format = j.value("format", std::string());
    if (format != kRunConfigFormat) {
      throw ConfigError("run config format '" + format + "' is not " + std::string(kRunConfigFormat));
    }
    if (j.contains("model")) c.model = config_from_json(j.at("model"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("expansion")) {
      const auto& e = j.at("expansion");
      if (e.contains("strategy")) c.expansion.strategy = parse_strategy(e.at("strategy").get<std::string>());
      c.expansion.k = e.value("k", c.expansion.k);
      if (e.contains("importance_method")) {
        c.expansion.importance_method = parse_method(e.at("importance_method").get<std::string>());
      }
      c.expansion.span = e.value("span", c.expansion.span);
    }
    if (j.contains("window")) {
      const auto& w = j.at("window");
      c.window = {w.at("window").get<std::size_t>(), w.at("stride").get<std::size_t>(),
                  w.at("overlap").get<std::size_t>()};
    }
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.train_corpus = resolve(p, "train_corpus", base_dir);
      c.paths.probe_corpus = resolve(p, "probe_corpus", base_dir);
      c.paths.general_eval = resolve(p, "general_eval", base_dir);
      c.paths.target_eval = resolve(p, "target_eval", base_dir);
      if (p.contains("checkpoint_dir")) c.paths.checkpoint_dir = resolve(p, "checkpoint_dir", base_dir);
      if (p.contains("report_dir")) c.paths.report_dir = resolve(p, "report_dir", base_dir);
    }
    if (!(j.contains("paths") && j.at("paths").contains("report_dir"))) {
      if (const char* env = std::getenv(kReportDirEnv); env && *env) c.paths.report_dir = env;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig c = run_config_from_json(j, path.parent_path());
  c.validate();
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"format", kRunConfigFormat},
          {"model", config_to_json(c.model)},
          {"train", to_json(c.train)},
          {"expansion",
           {{"strategy", strategy_name(c.expansion.strategy)},
            {"k", c.expansion.k},
            {"importance_method", method_name(c.expansion.importance_method)},
            {"span", c.expansion.span}}},
          {"window", {{"window", c.window.window}, {"stride", c.window.stride}, {"overlap", c.window.overlap}}},
          {"paths",
           {{"train_corpus", c.paths.train_corpus.string()},
            {"probe_corpus", c.paths.probe_corpus.string()},
            {"general_eval", c.paths.general_eval.string()},
            {"target_eval", c.paths.target_eval.string()},
            {"checkpoint_dir", c.paths.checkpoint_dir.string()},
            {"report_dir", c.paths.report_dir.string()}}}};
}

Corpus load_segmented_corpus(const std::filesystem::path& path, const RunConfig& config) {
  if (path.empty()) throw ConfigError("no corpus path configured");
  Corpus raw = load_corpus_jsonl(path, ByteTokenizer(config.model.vocab_size));
  organize_corpus(raw);
  Corpus out = segment_corpus(raw, config.window);
  if (out.empty()) throw ConfigError(path.string() + " holds no usable documents");
  return out;
}

std::string write_artifact(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::string h = hash_hex(fnv1a64(bytes));
  write_file_atomic(path, bytes);
  write_file_atomic(path.string() + ".fnv1a64", h + "\n");
  return h;
}

std::string write_checkpoint_artifact(const Model& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_checkpoint(model, path);
  const std::string h = hash_hex(fnv1a64(read_file(path)));
  write_file_atomic(path.string() + ".fnv1a64", h + "\n");
  return h;
}

}  // namespace adept
