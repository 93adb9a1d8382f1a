// Command-line driver: corpus generation, warm start, staged training,
// evaluation, the rollout-budget ablation, and report emission.
//
// Exit codes: 0 success, 2 config error, 3 training error, 4 IO error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlvr/checkpoint.hpp"
#include "rlvr/config.hpp"
#include "rlvr/corpus.hpp"
#include "rlvr/curriculum.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/metrics.hpp"
#include "rlvr/report.hpp"
#include "rlvr/warmstart.hpp"

namespace fs = std::filesystem;
using namespace rlvr;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;  // empty = config output_dir
  int workers = 0;      // 0 = config value
};

config::RunConfig load_config(const CommonArgs& args) {
  config::RunConfig cfg = args.config_path.empty()
                              ? config::RunConfig{}
                              : config::parse_config_file(args.config_path);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (args.workers > 0) cfg.workers = args.workers;
  return cfg;
}

fs::path ensure_out_dir(const config::RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir.string());
  return dir;
}

void check_manifest(const std::string& ckpt_path,
                    const config::RunConfig& cfg, bool allow_mismatch) {
  std::string manifest_path = ckpt_path + ".manifest.json";
  if (!fs::exists(manifest_path)) return;
  checkpoint::Manifest m = checkpoint::load_manifest(ckpt_path);
  if (m.config_hash != config::config_hash(cfg) && !allow_mismatch) {
    throw ConfigError("checkpoint " + ckpt_path +
                      " was produced under a different config (hash mismatch);"
                      " pass --allow-config-mismatch to load it anyway");
  }
}

checkpoint::Manifest make_manifest(const std::string& stage, int step,
                                   const config::RunConfig& cfg,
                                   const std::vector<grpo::StepReport>& steps) {
  checkpoint::Manifest m;
  m.stage = stage;
  m.step = step;
  m.config_hash = config::config_hash(cfg);
  if (!steps.empty()) {
    const auto& last = steps.back();
    m.metrics["mean_reward"] = last.mean_reward;
    m.metrics["mean_entropy"] = last.mean_entropy;
    m.metrics["loss"] = last.loss;
    m.metrics["kl"] = last.kl;
  }
  return m;
}

corpus::Corpus restrict_corpus(const corpus::Corpus& full,
                               const std::vector<std::string>& ids) {
  std::set<std::string> keep(ids.begin(), ids.end());
  corpus::Corpus out;
  out.seed = full.seed;
  out.config = full.config;
  for (const auto& p : full.problems) {
    if (keep.count(p.id)) out.problems.push_back(p);
  }
  return out;
}

std::vector<const corpus::Problem*> resolve_ids(
    const corpus::Corpus& corpus, const std::vector<std::string>& ids) {
  std::vector<const corpus::Problem*> out;
  for (const auto& id : ids) {
    const corpus::Problem* p = corpus.find(id);
    if (!p) throw ConfigError("unknown problem id '" + id + "'");
    out.push_back(p);
  }
  return out;
}

int cmd_gen(const CommonArgs& args, const std::string& out_path) {
  config::RunConfig cfg = load_config(args);
  corpus::Corpus corpus = corpus::generate_corpus(cfg.corpus, cfg.seed);
  corpus::save_corpus(corpus, out_path);
  int counts[3] = {0, 0, 0};
  for (const auto& p : corpus.problems) {
    ++counts[static_cast<int>(p.difficulty)];
  }
  std::printf("wrote %s: %zu problems (easy %d, medium %d, hard %d)\n",
              out_path.c_str(), corpus.problems.size(), counts[0], counts[1],
              counts[2]);
  return 0;
}

int cmd_warmstart(const CommonArgs& args, const std::string& corpus_path,
                  const std::string& strategy) {
  config::RunConfig cfg = load_config(args);
  if (!strategy.empty()) {
    cfg.warmstart.strategy = warmstart::strategy_from_name(strategy);
  }
  fs::path dir = ensure_out_dir(cfg);
  corpus::Corpus corpus = corpus::load_corpus(corpus_path);

  policy::PolicyDims dims;
  dims.t_max = cfg.corpus.t_max;
  std::vector<warmstart::CurationRecord> curation;
  policy::PolicyParams params =
      warmstart::run_warmstart(corpus, cfg.warmstart, dims, cfg.seed, &curation);

  std::string ckpt = (dir / "warmstart.ckpt").string();
  checkpoint::save(params, ckpt);
  checkpoint::save_manifest(make_manifest("warmstart", 0, cfg, {}), ckpt);
  warmstart::save_curation_report(curation, (dir / "curation.jsonl").string());
  std::printf("wrote %s (%zu curated examples in report)\n", ckpt.c_str(),
              curation.size());
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& corpus_path,
              bool skip_warmstart, bool skip_stage1, bool skip_stage2,
              const std::string& strategy) {
  config::RunConfig cfg = load_config(args);
  if (!strategy.empty()) {
    cfg.warmstart.strategy = warmstart::strategy_from_name(strategy);
  }
  fs::path dir = ensure_out_dir(cfg);
  corpus::Corpus full = corpus::load_corpus(corpus_path);

  // Training only ever sees the train side of the holdout split.
  auto [train_ids, holdout_ids] =
      config::holdout_split(full, cfg.eval.holdout_fraction, cfg.seed);
  corpus::Corpus train_corpus =
      holdout_ids.empty() ? full : restrict_corpus(full, train_ids);

  curriculum::PipelineConfig pipeline;
  pipeline.warmstart_plan = cfg.warmstart;
  pipeline.stage1 = cfg.stage1;
  pipeline.stage2 = cfg.stage2;
  pipeline.grpo_stage1 = cfg.grpo;
  pipeline.grpo_stage2 = cfg.grpo;
  pipeline.dims.t_max = cfg.corpus.t_max;
  pipeline.skip_warmstart = skip_warmstart;
  pipeline.skip_stage1 = skip_stage1;
  pipeline.skip_stage2 = skip_stage2;

  curriculum::PipelineResult result =
      curriculum::run_pipeline(train_corpus, pipeline, cfg.seed, cfg.workers);

  std::vector<grpo::StepReport> combined = result.stage1_trace.steps;
  combined.insert(combined.end(), result.stage2_trace.steps.begin(),
                  result.stage2_trace.steps.end());

  for (const auto& [stage, params] : result.checkpoints) {
    std::string ckpt = (dir / (stage + ".ckpt")).string();
    checkpoint::save(params, ckpt);
    int step = 0;
    std::vector<grpo::StepReport> stage_steps;
    if (stage == "stage1") stage_steps = result.stage1_trace.steps;
    if (stage == "stage2") stage_steps = result.stage2_trace.steps;
    if (!stage_steps.empty()) step = stage_steps.back().step;
    checkpoint::save_manifest(make_manifest(stage, step, cfg, stage_steps),
                              ckpt);
    std::printf("wrote %s\n", ckpt.c_str());
  }

  report::write_trace_csv(combined, (dir / "trace.csv").string());
  report::write_trace_json(combined, (dir / "trace.json").string());
  report::write_pass_rate_csv(combined, (dir / "pass_rates.csv").string());
  report::write_entropy_chart(combined, (dir / "entropy.svg").string());
  if (!result.curation.empty()) {
    warmstart::save_curation_report(result.curation,
                                    (dir / "curation.jsonl").string());
  }
  if (!result.stage2_trace.retentions.empty()) {
    curriculum::save_retention_log(result.stage2_trace.retentions,
                                   (dir / "retention.jsonl").string());
  }

  // Holdout ids alongside the run so eval can reuse the exact split.
  {
    nlohmann::ordered_json j{{"schema", "split-v1"},
                             {"train", train_ids},
                             {"holdout", holdout_ids}};
    std::ofstream out(dir / "split.json");
    if (!out) throw IoError("cannot write split file");
    out << j.dump(2) << '\n';
  }
  std::printf("trace: %zu steps across %zu stage checkpoints\n",
              combined.size(), result.checkpoints.size());
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& ckpt_path,
             const std::string& corpus_path, const std::string& split,
             std::vector<int> ks, bool allow_mismatch) {
  config::RunConfig cfg = load_config(args);
  fs::path dir = ensure_out_dir(cfg);
  check_manifest(ckpt_path, cfg, allow_mismatch);
  policy::PolicyParams params = checkpoint::load(ckpt_path);
  corpus::Corpus corpus = corpus::load_corpus(corpus_path);
  if (ks.empty()) ks = cfg.eval.ks;

  std::vector<std::string> ids;
  if (split == "all") {
    for (const auto& p : corpus.problems) ids.push_back(p.id);
  } else {
    auto [train_ids, holdout_ids] =
        config::holdout_split(corpus, cfg.eval.holdout_fraction, cfg.seed);
    ids = (split == "holdout") ? holdout_ids : train_ids;
  }
  if (ids.empty()) throw ConfigError("evaluation split '" + split + "' is empty");

  auto problems = resolve_ids(corpus, ids);
  auto results = metrics::evaluate(
      params, problems, cfg.eval.n_samples, ks, cfg.eval.temperature,
      params.dims.t_max, RngKey::root(cfg.seed, purpose::kEval), cfg.workers,
      cfg.eval.greedy);

  report::write_eval_csv(results, (dir / "eval.csv").string());
  report::write_eval_json(results, (dir / "eval.json").string());

  double avg = 0.0;
  std::map<int, double> agg;
  for (const auto& r : results) {
    avg += r.avg_at_1;
    for (const auto& [k, v] : r.pass_at_k) agg[k] += v;
  }
  std::printf("evaluated %zu problems (%s split): avg@1 %.4f",
              results.size(), split.c_str(),
              avg / static_cast<double>(results.size()));
  for (const auto& [k, sum] : agg) {
    std::printf("  pass@%d %.4f", k, sum / static_cast<double>(results.size()));
  }
  std::printf("\n");
  return 0;
}

int cmd_ablate_rollout(const CommonArgs& args, const std::string& ckpt_path,
                       const std::string& corpus_path,
                       std::vector<std::string> targets,
                       std::vector<int> budgets, int steps,
                       bool allow_mismatch) {
  config::RunConfig cfg = load_config(args);
  fs::path dir = ensure_out_dir(cfg);
  if (targets.empty()) throw ConfigError("ablate-rollout needs >= 1 target id");
  if (budgets.size() < 2) throw ConfigError("ablate-rollout needs >= 2 budgets");
  check_manifest(ckpt_path, cfg, allow_mismatch);

  policy::PolicyParams base = checkpoint::load(ckpt_path);
  corpus::Corpus corpus = corpus::load_corpus(corpus_path);
  auto target_problems = resolve_ids(corpus, targets);

  // Held-out probe set: everything that is not a target.
  std::vector<const corpus::Problem*> probe_set;
  std::set<std::string> target_set(targets.begin(), targets.end());
  for (const auto& p : corpus.problems) {
    if (!target_set.count(p.id)) probe_set.push_back(&p);
  }

  auto probe_avg = [&](const policy::PolicyParams& params, RngKey key) {
    if (probe_set.empty()) return 0.0;
    auto results = metrics::evaluate(params, probe_set, cfg.eval.n_samples,
                                     {1}, cfg.eval.temperature,
                                     params.dims.t_max, key, cfg.workers);
    double sum = 0.0;
    for (const auto& r : results) sum += r.avg_at_1;
    return sum / static_cast<double>(results.size());
  };

  RngKey probe_key = RngKey::root(cfg.seed, purpose::kProbe).child(0xab1a);
  double pre_probe = probe_avg(base, probe_key.child(0));

  std::vector<report::Series> chart;
  nlohmann::ordered_json budgets_json = nlohmann::ordered_json::array();
  std::ofstream csv(dir / "ablation.csv");
  if (!csv) throw IoError("cannot write ablation.csv");
  csv << "ablation-csv-v1\nbudget,step,mean_target_pass_rate\n";

  for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
    int G = budgets[bi];
    policy::PolicyParams params = base;  // fresh start per budget
    policy::PolicyParams ref = base;
    optim::OptimizerState opt = optim::OptimizerState::zeros(params.dims);
    grpo::GrpoConfig gcfg = cfg.grpo;
    gcfg.group_size = G;
    RngKey run_key = RngKey::root(cfg.seed, purpose::kRollout)
                         .child(0xab1a)
                         .child(static_cast<std::uint64_t>(G));

    report::Series series;
    series.label = "G=" + std::to_string(G);
    for (int step = 0; step < steps; ++step) {
      grpo::StepReport r = grpo::train_step(
          params, ref, opt, target_problems, gcfg, params.dims.t_max,
          run_key.child(static_cast<std::uint64_t>(step)), cfg.workers);
      double mean = 0.0;
      for (const auto& [id, rate] : r.pass_rates) mean += rate;
      mean /= static_cast<double>(r.pass_rates.size());
      series.values.push_back(mean);
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", mean);
      csv << G << ',' << step << ',' << buf << '\n';
    }
    double post_probe = probe_avg(params, probe_key.child(bi + 1));
    budgets_json.push_back({{"budget", G},
                            {"target_series", series.values},
                            {"probe_avg_at_1_pre", pre_probe},
                            {"probe_avg_at_1_post", post_probe}});
    chart.push_back(std::move(series));
  }

  {
    std::ofstream out(dir / "ablation.json");
    if (!out) throw IoError("cannot write ablation.json");
    out << nlohmann::ordered_json{{"schema", "ablation-json-v1"},
                                  {"targets", targets},
                                  {"steps", steps},
                                  {"budgets", budgets_json}}
               .dump(2)
        << '\n';
  }
  report::write_line_chart_svg(chart, "Rollout-budget comparison",
                               "mean target pass rate",
                               (dir / "ablation.svg").string());
  std::printf("ablation over %zu budgets x %d steps written to %s\n",
              budgets.size(), steps, dir.string().c_str());
  return 0;
}

int cmd_report(const CommonArgs& args, const std::string& trace_path,
               const std::string& eval_path) {
  config::RunConfig cfg = load_config(args);
  fs::path dir = ensure_out_dir(cfg);
  if (!trace_path.empty()) {
    auto steps = report::read_trace_json(trace_path);
    report::write_trace_csv(steps, (dir / "trace.csv").string());
    report::write_pass_rate_csv(steps, (dir / "pass_rates.csv").string());
    report::write_entropy_chart(steps, (dir / "entropy.svg").string());
    std::printf("re-emitted %zu trace steps\n", steps.size());
  }
  if (!eval_path.empty()) {
    auto results = report::read_eval_json(eval_path);
    report::write_eval_csv(results, (dir / "eval.csv").string());
    std::printf("re-emitted %zu eval rows\n", results.size());
  }
  if (trace_path.empty() && eval_path.empty()) {
    throw ConfigError("report needs --trace and/or --eval");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale RLVR trainer for the stack-machine DSL"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "Run config file (INI)");
  app.add_option("--out-dir", common.out_dir, "Override [run] output_dir");
  app.add_option("--workers", common.workers, "Override [run] workers");

  auto* gen = app.add_subcommand("gen", "Generate a problem corpus");
  std::string gen_out = "corpus.jsonl";
  gen->add_option("--out", gen_out, "Corpus output path");

  auto* warm = app.add_subcommand("warmstart", "Curate + supervised warm start");
  std::string warm_corpus, warm_strategy;
  warm->add_option("--corpus", warm_corpus, "Corpus file")->required();
  warm->add_option("--strategy", warm_strategy,
                   "basic | arena | twice_hard (overrides config)");

  auto* train = app.add_subcommand("train", "Run the full training pipeline");
  std::string train_corpus, train_strategy;
  bool skip_warmstart = false, skip_stage1 = false, skip_stage2 = false;
  train->add_option("--corpus", train_corpus, "Corpus file")->required();
  train->add_flag("--skip-warmstart", skip_warmstart, "Start from zero init");
  train->add_flag("--skip-stage1", skip_stage1, "Skip entropy-expansion stage");
  train->add_flag("--skip-stage2", skip_stage2, "Skip hard-focus stage");
  train->add_option("--strategy", train_strategy,
                    "basic | arena | twice_hard (overrides config)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string eval_ckpt, eval_corpus, eval_split = "holdout";
  std::vector<int> eval_ks;
  bool eval_mismatch = false;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--corpus", eval_corpus, "Corpus file")->required();
  eval->add_option("--split", eval_split, "train | holdout | all");
  eval->add_option("--ks", eval_ks, "pass@k values (default from config)");
  eval->add_flag("--allow-config-mismatch", eval_mismatch,
                 "Load despite a manifest config-hash mismatch");

  auto* ablate = app.add_subcommand(
      "ablate-rollout", "Compare rollout budgets on fixed target problems");
  std::string ab_ckpt, ab_corpus;
  std::vector<std::string> ab_targets;
  std::vector<int> ab_budgets;
  int ab_steps = 24;
  bool ab_mismatch = false;
  ablate->add_option("--checkpoint", ab_ckpt, "Starting checkpoint")->required();
  ablate->add_option("--corpus", ab_corpus, "Corpus file")->required();
  ablate->add_option("--targets", ab_targets, "Target problem ids")->required();
  ablate->add_option("--budgets", ab_budgets, "Group sizes to compare")
      ->required();
  ablate->add_option("--steps", ab_steps, "Training steps per budget");
  ablate->add_flag("--allow-config-mismatch", ab_mismatch,
                   "Load despite a manifest config-hash mismatch");

  auto* rep = app.add_subcommand("report", "Re-emit reports from trace files");
  std::string rep_trace, rep_eval;
  rep->add_option("--trace", rep_trace, "trace.json produced by train");
  rep->add_option("--eval", rep_eval, "eval.json produced by eval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(common, gen_out);
    if (warm->parsed()) return cmd_warmstart(common, warm_corpus, warm_strategy);
    if (train->parsed()) {
      return cmd_train(common, train_corpus, skip_warmstart, skip_stage1,
                       skip_stage2, train_strategy);
    }
    if (eval->parsed()) {
      return cmd_eval(common, eval_ckpt, eval_corpus, eval_split, eval_ks,
                      eval_mismatch);
    }
    if (ablate->parsed()) {
      return cmd_ablate_rollout(common, ab_ckpt, ab_corpus, ab_targets,
                                ab_budgets, ab_steps, ab_mismatch);
    }
    if (rep->parsed()) return cmd_report(common, rep_trace, rep_eval);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const TrainError& e) {
    std::fprintf(stderr, "training error: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
