// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: probing, expansion, continual pretraining,
// evaluation and the analysis / experiment harnesses.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adept/analysis.hpp"
#include "adept/checkpoint.hpp"
#include "adept/error.hpp"
#include "adept/evaluation.hpp"
#include "adept/expansion.hpp"
#include "adept/experiment.hpp"
#include "adept/grad_check.hpp"
#include "adept/importance.hpp"
#include "adept/run_config.hpp"
#include "adept/synthetic.hpp"
#include "adept/trainer.hpp"

namespace fs = std::filesystem;
using namespace adept;

namespace {

// Flags shared by every verb that reads a run config; unset flags leave the
// file (or default) values alone.
struct Overrides {
  std::string config;
  std::optional<std::size_t> k;
  std::optional<std::string> strategy;
  std::optional<std::string> method;
  std::optional<std::string> mode;
  std::optional<std::string> normalization;
  std::optional<double> lr;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> recompute_interval;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> report_dir;
  std::optional<std::string> train_corpus;
  std::optional<std::string> probe_corpus;
  std::optional<std::string> general_eval;
  std::optional<std::string> target_eval;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "Run config (JSON)");
    cmd->add_option("--k", k, "Number of layers to expand");
    cmd->add_option("--strategy", strategy, "importance_guided | uniform | uniform_first_half | uniform_last_half");
    cmd->add_option("--method", method, "masking_out | taylor_cumulation | rank_aggregation | fisher");
    cmd->add_option("--mode", mode, "adept | full | uniform_expand | expand_no_decouple");
    cmd->add_option("--normalization", normalization, "minmax | budget_exact");
    cmd->add_option("--lr", lr, "Base learning rate");
    cmd->add_option("--steps", steps, "Total training steps");
    cmd->add_option("--batch-size", batch_size, "Documents per step");
    cmd->add_option("--recompute-interval", recompute_interval, "Steps between unit-importance refreshes");
    cmd->add_option("--seed", seed, "Training seed");
    cmd->add_option("--report-dir", report_dir, "Directory for reports (default $ADEPT_REPORT_DIR or ./reports)");
    cmd->add_option("--train-corpus", train_corpus, "Training corpus (JSON lines)");
    cmd->add_option("--probe-corpus", probe_corpus, "Probe corpus (JSON lines)");
    cmd->add_option("--general-eval", general_eval, "General held-out corpus (JSON lines)");
    cmd->add_option("--target-eval", target_eval, "Target held-out corpus (JSON lines)");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config.empty()) {
      c = load_run_config(config);
    } else if (const char* env = std::getenv(kReportDirEnv); env && *env) {
      c.paths.report_dir = env;
    }
    if (k) c.expansion.k = *k;
    if (strategy) c.expansion.strategy = parse_strategy(*strategy);
    if (method) c.expansion.importance_method = parse_method(*method);
    if (mode) c.train.mode = parse_mode(*mode);
    if (normalization) c.train.normalization_mode = parse_normalization(*normalization);
    if (lr) c.train.lr_base = *lr;
    if (steps) c.train.total_steps = *steps;
    if (batch_size) c.train.batch_size = *batch_size;
    if (recompute_interval) c.train.recompute_interval = *recompute_interval;
    if (seed) c.train.seed = *seed;
    if (report_dir) c.paths.report_dir = *report_dir;
    if (train_corpus) c.paths.train_corpus = *train_corpus;
    if (probe_corpus) c.paths.probe_corpus = *probe_corpus;
    if (general_eval) c.paths.general_eval = *general_eval;
    if (target_eval) c.paths.target_eval = *target_eval;
    c.validate();
    return c;
  }
};

void announce(const fs::path& path, const std::string& hash) {
  std::cout << "wrote " << path.string() << " (fnv1a64 " << hash << ")\n";
}

fs::path emit_json(const fs::path& path, const nlohmann::json& j) {
  announce(path, write_artifact(path, canonical_dump(j)));
  return path;
}

Model load_model(const std::string& path, const RunConfig& config) {
  Model m = load_checkpoint(path);
  if (m.config.vocab_size != config.model.vocab_size) {
    throw ConfigError("checkpoint vocab " + std::to_string(m.config.vocab_size) + " differs from config vocab " +
                      std::to_string(config.model.vocab_size));
  }
  return m;
}

std::string corpus_line(const std::string& kind, const std::string& text, const std::string& tag) {
  return nlohmann::json{{"kind", kind}, {"text", text}, {"language_tag", tag}}.dump() + "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"ADEPT-Lab: importance-guided layer expansion and decoupled continual pretraining"};
  app.require_subcommand(1);

  // init
  Overrides init_o;
  std::string init_out;
  auto* init = app.add_subcommand("init", "Write a freshly initialised checkpoint for the configured model");
  init_o.add_to(init);
  init->add_option("-o,--out", init_out, "Output checkpoint")->required();
  init->callback([&] {
    const RunConfig c = init_o.resolve();
    announce(init_out, write_checkpoint_artifact(init_model(c.model), init_out));
  });

  // gen-corpus
  std::string gen_domain = "general", gen_kind = "pretrain", gen_out;
  std::size_t gen_count = 100;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic corpus as JSON lines");
  gen->add_option("--domain", gen_domain, "general | arithmetic | clinical | number_words | kitchen");
  gen->add_option("--kind", gen_kind, "pretrain | probe");
  gen->add_option("--count", gen_count, "Number of documents");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("-o,--out", gen_out, "Output file")->required();
  gen->callback([&] {
    const auto domain = synthetic::parse_domain(gen_domain);
    if (gen_kind != "pretrain" && gen_kind != "probe") throw ConfigError("--kind must be pretrain or probe");
    std::string out;
    for (const auto& text : synthetic::documents(domain, gen_count, gen_seed)) {
      out += corpus_line(gen_kind, text, synthetic::domain_name(domain));
    }
    announce(gen_out, write_artifact(gen_out, out));
  });

  // gen-items
  std::string items_domain = "number_words", items_out;
  std::size_t items_count = 50;
  std::uint64_t items_seed = 0;
  auto* gen_items = app.add_subcommand("gen-items", "Write synthetic multiple-choice items as JSON lines");
  gen_items->add_option("--domain", items_domain, "Item domain");
  gen_items->add_option("--count", items_count, "Number of items");
  gen_items->add_option("--seed", items_seed, "Generator seed");
  gen_items->add_option("-o,--out", items_out, "Output file")->required();
  gen_items->callback([&] {
    const auto items = synthetic::mc_items(synthetic::parse_domain(items_domain), items_count, items_seed);
    announce(items_out, write_artifact(items_out, items_to_jsonl(items)));
  });

  // pretrain
  Overrides pre_o;
  std::string pre_out, pre_in;
  auto* pre = app.add_subcommand("pretrain", "Train every parameter of a model on the train corpus (mode full)");
  pre_o.add_to(pre);
  pre->add_option("--checkpoint", pre_in, "Start from this checkpoint instead of a fresh model");
  pre->add_option("-o,--out", pre_out, "Output checkpoint")->required();
  pre->callback([&] {
    RunConfig c = pre_o.resolve();
    c.train.mode = TrainMode::kFull;
    Model m = pre_in.empty() ? init_model(c.model) : load_model(pre_in, c);
    m.set_all_frozen(false);
    const Corpus train = load_segmented_corpus(c.paths.train_corpus, c);
    std::optional<Corpus> heldout;
    if (!c.paths.general_eval.empty()) heldout = load_segmented_corpus(c.paths.general_eval, c);
    std::string log;
    train_cpt(m, train, c.train, heldout ? &*heldout : nullptr, nullptr,
              [&](const nlohmann::json& j) { log += j.dump() + "\n"; });
    announce(pre_out, write_checkpoint_artifact(m, pre_out));
    announce(c.paths.report_dir / "pretrain_metrics.jsonl",
             write_artifact(c.paths.report_dir / "pretrain_metrics.jsonl", log));
  });

  // probe
  Overrides probe_o;
  std::string probe_ckpt;
  auto* probe = app.add_subcommand("probe", "Layer- and unit-importance reports on the probe corpus");
  probe_o.add_to(probe);
  probe->add_option("--checkpoint", probe_ckpt, "Model checkpoint")->required();
  probe->callback([&] {
    const RunConfig c = probe_o.resolve();
    const Model m = load_model(probe_ckpt, c);
    const Corpus corpus = load_segmented_corpus(c.paths.probe_corpus, c);
    const auto layer_report = layer_importance(m, corpus, c.expansion.importance_method);
    std::vector<std::size_t> all(m.layers.size());
    for (std::size_t l = 0; l < all.size(); ++l) all[l] = l;
    const auto unit_report = unit_importance(m, corpus, all, c.train.normalization_mode);
    emit_json(c.paths.report_dir / "layer_importance.json", to_json(layer_report));
    emit_json(c.paths.report_dir / "unit_importance.json", to_json(unit_report));
    std::cout << "base_loss " << layer_report.base_loss << "\n";
  });

  // expand
  Overrides exp_o;
  std::string exp_ckpt, exp_report, exp_out;
  auto* expand_cmd = app.add_subcommand("expand", "Insert function-preserving copies of selected layers");
  exp_o.add_to(expand_cmd);
  expand_cmd->add_option("--checkpoint", exp_ckpt, "Un-expanded checkpoint")->required();
  expand_cmd->add_option("--report", exp_report, "Layer importance report (importance_guided strategy)");
  expand_cmd->add_option("-o,--out", exp_out, "Output checkpoint")->required();
  expand_cmd->callback([&] {
    const RunConfig c = exp_o.resolve();
    const Model m = load_model(exp_ckpt, c);
    ExpansionPlan plan;
    if (c.expansion.strategy == ExpansionStrategy::kImportanceGuided) {
      if (exp_report.empty()) throw ConfigError("importance_guided expansion needs --report");
      plan = select_layers(layer_report_from_json(nlohmann::json::parse(read_file(exp_report))), c.expansion.k);
    } else {
      plan = plan_uniform(m.layers.size(), c.expansion.k, c.expansion.strategy, c.expansion.span);
    }
    const Model e = expand(m, plan);
    const double diff = verify_function_preserving(m, e, 20);
    if (diff > 1e-12) throw InvariantError("expanded model is not function preserving (max diff " + std::to_string(diff) + ")");
    announce(exp_out, write_checkpoint_artifact(e, exp_out));
    emit_json(c.paths.report_dir / "expansion_plan.json", to_json(plan));
    std::cout << plan.display_name() << "\n";
  });

  // train
  Overrides train_o;
  std::string train_ckpt, train_out;
  auto* train = app.add_subcommand("train", "Continual pretraining on the train corpus");
  train_o.add_to(train);
  train->add_option("--checkpoint", train_ckpt, "Starting checkpoint")->required();
  train->add_option("-o,--out", train_out, "Output checkpoint")->required();
  train->callback([&] {
    const RunConfig c = train_o.resolve();
    Model m = load_model(train_ckpt, c);
    const Corpus corpus = load_segmented_corpus(c.paths.train_corpus, c);
    std::optional<Corpus> general, target;
    if (!c.paths.general_eval.empty()) general = load_segmented_corpus(c.paths.general_eval, c);
    if (!c.paths.target_eval.empty()) target = load_segmented_corpus(c.paths.target_eval, c);
    std::string log;
    train_cpt(m, corpus, c.train, general ? &*general : nullptr, target ? &*target : nullptr,
              [&](const nlohmann::json& j) { log += j.dump() + "\n"; });
    announce(train_out, write_checkpoint_artifact(m, train_out));
    const fs::path metrics = c.paths.report_dir / "train_metrics.jsonl";
    announce(metrics, write_artifact(metrics, log));
  });

  // eval
  Overrides eval_o;
  std::string eval_ckpt, eval_items, eval_corpus, eval_name = "eval.json";
  auto* eval = app.add_subcommand("eval", "Multiple-choice accuracy or held-out loss");
  eval_o.add_to(eval);
  eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();
  eval->add_option("--items", eval_items, "Multiple-choice items (JSON lines)");
  eval->add_option("--corpus", eval_corpus, "Held-out corpus (JSON lines)");
  eval->add_option("--name", eval_name, "Report file name inside the report dir");
  eval->callback([&] {
    const RunConfig c = eval_o.resolve();
    if (eval_items.empty() == eval_corpus.empty()) throw ConfigError("eval needs exactly one of --items or --corpus");
    const Model m = load_model(eval_ckpt, c);
    nlohmann::json report = {{"kind", "eval"}, {"checkpoint", fs::path(eval_ckpt).filename().string()}};
    if (!eval_items.empty()) {
      const auto items = load_items_jsonl(eval_items);
      report["accuracy"] = accuracy(m, items);
      report["items"] = items.size();
      std::cout << "accuracy " << report["accuracy"].get<double>() << "\n";
    } else {
      const Corpus corpus = load_segmented_corpus(eval_corpus, c);
      report["heldout_loss"] = heldout_loss(m, corpus);
      report["documents"] = corpus.size();
      std::cout << "heldout_loss " << report["heldout_loss"].get<double>() << "\n";
    }
    emit_json(c.paths.report_dir / eval_name, report);
  });

  // analyze-shift
  Overrides shift_o;
  std::string shift_base, shift_tuned, shift_corpus;
  auto* shift = app.add_subcommand("analyze-shift", "Token distribution shift between a base and a tuned model");
  shift_o.add_to(shift);
  shift->add_option("--base", shift_base, "Base checkpoint")->required();
  shift->add_option("--tuned", shift_tuned, "Tuned checkpoint")->required();
  shift->add_option("--corpus", shift_corpus, "Corpus (JSON lines)")->required();
  shift->callback([&] {
    const RunConfig c = shift_o.resolve();
    const auto r = token_shift_analysis(load_model(shift_base, c), load_model(shift_tuned, c),
                                        load_segmented_corpus(shift_corpus, c));
    emit_json(c.paths.report_dir / "token_shift.json", to_json(r));
    std::cout << "unshifted " << r.fraction(ShiftCategory::kUnshifted) << " marginal "
              << r.fraction(ShiftCategory::kMarginal) << " shifted " << r.fraction(ShiftCategory::kShifted) << "\n";
  });

  // merge
  std::vector<std::string> merge_ckpts;
  std::vector<double> merge_weights;
  std::string merge_out;
  auto* merge = app.add_subcommand("merge", "Weighted average of the expanded layers of several checkpoints");
  merge->add_option("--checkpoints", merge_ckpts, "Expanded checkpoints")->required()->expected(1, -1);
  merge->add_option("--weights", merge_weights, "One weight per checkpoint")->required()->expected(1, -1);
  merge->add_option("-o,--out", merge_out, "Output checkpoint")->required();
  merge->callback([&] {
    std::vector<Model> models;
    for (const auto& p : merge_ckpts) models.push_back(load_checkpoint(p));
    announce(merge_out, write_checkpoint_artifact(merge_expanded(models, MergeSpec{merge_weights}), merge_out));
  });

  // sweep-k
  Overrides sweep_o;
  std::string sweep_ckpt;
  std::vector<std::size_t> sweep_ks;
  auto* sweep = app.add_subcommand("sweep-k", "Expand and train once per k; tabulate held-out losses");
  sweep_o.add_to(sweep);
  sweep->add_option("--checkpoint", sweep_ckpt, "Un-expanded base checkpoint")->required();
  sweep->add_option("--ks", sweep_ks, "Values of k")->required()->delimiter(',');
  sweep->callback([&] {
    RunConfig c = sweep_o.resolve();
    c.train.mode = TrainMode::kAdept;
    const Model base = load_model(sweep_ckpt, c);
    const auto report =
        layer_importance(base, load_segmented_corpus(c.paths.probe_corpus, c), c.expansion.importance_method);
    DomainData general{Corpus{}, load_segmented_corpus(c.paths.general_eval, c)};
    DomainData target{load_segmented_corpus(c.paths.train_corpus, c), load_segmented_corpus(c.paths.target_eval, c)};
    const auto rows = sweep_k(base, report, sweep_ks, general, target, c.train,
                              [](const std::string& s) { std::cerr << s << "\n"; });
    nlohmann::json table = nlohmann::json::array();
    for (const auto& r : rows) {
      table.push_back(to_json(r));
      std::cout << r.k << "\t" << r.plan_name << "\tgeneral " << r.general_loss << "\ttarget " << r.target_loss << "\n";
    }
    emit_json(c.paths.report_dir / "sweep_k.json", {{"kind", "sweep_k"}, {"rows", table}});
  });

  // grad-check
  Overrides gc_o;
  GradCheckOptions gc_opts;
  auto* gc = app.add_subcommand("grad-check", "Autodiff against finite differences on every parameter");
  gc_o.add_to(gc);
  gc->add_option("--seq-len", gc_opts.seq_len, "Sequence length");
  gc->add_option("--eps", gc_opts.eps, "Finite-difference step");
  gc->add_option("--tolerance", gc_opts.tolerance, "Maximum relative error");
  gc->callback([&] {
    RunConfig c = gc_o.resolve();
    if (gc_o.config.empty()) {
      c.model = ModelConfig{.n_layers = 2, .d_model = 8, .n_heads = 2, .d_ff = 16, .vocab_size = 64,
                            .max_seq_len = 32, .seed = 0, .tie_embeddings = true};
    }
    const auto r = grad_check_model(init_model(c.model), gc_opts);
    emit_json(c.paths.report_dir / "grad_check.json", to_json(r));
    std::cout << (r.passed ? "PASS" : "FAIL") << " max relative error " << r.max_relative_error << "\n";
    if (!r.passed) throw NumericError("gradient check failed");
  });

  // experiment
  std::string xp_out = "forgetting_experiment.json";
  std::optional<std::string> xp_report_dir;
  auto* xp = app.add_subcommand("experiment", "Two-domain forgetting experiment (full / uniform_expand / adept)");
  xp->add_option("--report-dir", xp_report_dir, "Directory for the summary");
  xp->callback([&] {
    fs::path dir = "reports";
    if (const char* env = std::getenv(kReportDirEnv); env && *env) dir = env;
    if (xp_report_dir) dir = *xp_report_dir;
    const auto r = run_forgetting_experiment(ForgettingConfig{}, [](const std::string& s) { std::cerr << s << "\n"; });
    emit_json(dir / xp_out, summarize(r));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const adept::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
