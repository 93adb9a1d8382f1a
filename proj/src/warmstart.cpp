#include "rlvr/warmstart.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "rlvr/errors.hpp"
#include "rlvr/judge.hpp"

namespace rlvr::warmstart {

using policy::PolicyParams;

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kBasic: return "basic";
    case Strategy::kArena: return "arena";
    case Strategy::kTwiceHard: return "twice_hard";
  }
  return "?";
}

Strategy strategy_from_name(std::string_view name) {
  if (name == "basic") return Strategy::kBasic;
  if (name == "arena") return Strategy::kArena;
  if (name == "twice_hard") return Strategy::kTwiceHard;
  throw ConfigError("unknown warmstart strategy '" + std::string(name) + "'");
}

double supervised_step(PolicyParams& params, optim::OptimizerState& opt_state,
                       std::span<const SupervisedExample> batch,
                       const optim::AdamConfig& optimizer) {
  if (batch.empty()) throw TrainError("supervised_step requires a non-empty batch");
  double weight_sum = 0.0;
  for (const auto& ex : batch) weight_sum += ex.weight;

  double loss = 0.0;
  policy::ParamVector grad = policy::ParamVector::zeros(params.dims);
  for (const auto& ex : batch) {
    double lp = policy::sequence_logprob(params, ex.features, ex.target);
    loss -= ex.weight * lp / weight_sum;
    policy::accumulate_grad_sequence_logprob(params, ex.features, ex.target,
                                             -ex.weight / weight_sum, grad);
  }
  optim::adam_update(params.weights, opt_state, grad, optimizer);
  params.mark_updated();
  return loss;
}

namespace {

SupervisedExample make_example(const corpus::Problem& p, int feature_dim,
                               double weight) {
  return SupervisedExample{p.id, p.reference, weight,
                           policy::problem_features(p, feature_dim)};
}

void require_unique_ids(const corpus::Corpus& corpus) {
  std::set<std::string> seen;
  for (const auto& p : corpus.problems) {
    if (!seen.insert(p.id).second) {
      throw TrainError("curation requires unique problem ids; duplicate '" +
                       p.id + "'");
    }
  }
}

void train_examples(PolicyParams& params,
                    const std::vector<SupervisedExample>& examples,
                    int epochs, double learning_rate, int batch_size,
                    RngKey key) {
  if (examples.empty()) return;
  optim::AdamConfig optimizer;
  optimizer.learning_rate = learning_rate;
  optim::OptimizerState opt_state = optim::OptimizerState::zeros(params.dims);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    RngStream rng = key.child(static_cast<std::uint64_t>(epoch)).stream();
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(batch_size)) {
      std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      std::vector<SupervisedExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      supervised_step(params, opt_state, batch, optimizer);
    }
  }
}

int probe_pass_count(const PolicyParams& probe, const corpus::Problem& problem,
                     int rollouts, int t_max, RngKey key) {
  auto features = policy::problem_features(problem, probe.dims.feature_dim);
  int passes = 0;
  for (int r = 0; r < rollouts; ++r) {
    RngStream rng = key.child(static_cast<std::uint64_t>(r)).stream();
    auto seq = policy::sample(probe, features, 1.0, t_max, rng);
    if (judge::judge(seq.program, problem).all_passed) ++passes;
  }
  return passes;
}

}  // namespace

std::vector<SupervisedExample> curate_basic(const corpus::Corpus& corpus,
                                            int feature_dim) {
  require_unique_ids(corpus);
  std::vector<SupervisedExample> out;
  out.reserve(corpus.problems.size());
  const int fdim = feature_dim;
  for (const auto& p : corpus.problems) {
    out.push_back(make_example(p, fdim, 1.0));
  }
  return out;
}

std::vector<SupervisedExample> curate_arena(
    const corpus::Corpus& corpus, int folds, const CurationPlan& plan,
    std::uint64_t seed, std::vector<CurationRecord>* report, int feature_dim) {
  if (folds < 2) throw ConfigError("arena curation requires folds >= 2");
  require_unique_ids(corpus);
  const int fdim = feature_dim;
  const int t_max = corpus.config.t_max;
  const std::size_t n = corpus.problems.size();
  std::vector<SupervisedExample> retained;
  if (n == 0) return retained;

  // Sequential fold split over corpus order.
  std::vector<std::vector<const corpus::Problem*>> fold_members(
      static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t f = i * static_cast<std::size_t>(folds) / n;
    fold_members[f].push_back(&corpus.problems[i]);
  }

  policy::PolicyDims dims;
  dims.feature_dim = fdim;
  dims.t_max = t_max;
  PolicyParams probe = PolicyParams::zero_init(dims);
  RngKey key = RngKey::root(seed, purpose::kProbe);

  // Seed fold is always kept and trains the initial probe.
  for (const corpus::Problem* p : fold_members[0]) {
    retained.push_back(make_example(*p, fdim, 1.0));
    if (report) report->push_back({p->id, 1, -1, true, 1.0});
  }
  train_examples(probe, retained, plan.probe_epochs, plan.learning_rate,
                 plan.batch_size, key.child(0));

  for (int f = 1; f < folds; ++f) {
    std::vector<SupervisedExample> fold_hard;
    for (std::size_t j = 0; j < fold_members[static_cast<std::size_t>(f)].size(); ++j) {
      const corpus::Problem* p = fold_members[static_cast<std::size_t>(f)][j];
      int passes = probe_pass_count(
          probe, *p, plan.probe_rollouts, t_max,
          key.child(1000 + static_cast<std::uint64_t>(f)).child(j));
      bool keep = passes == 0;
      if (keep) fold_hard.push_back(make_example(*p, fdim, 1.0));
      if (report) report->push_back({p->id, f + 1, passes, keep, keep ? 1.0 : 0.0});
    }
    // Grow the probe on this fold's hard examples before advancing.
    if (!fold_hard.empty()) {
      train_examples(probe, fold_hard, plan.probe_epochs, plan.learning_rate,
                     plan.batch_size, key.child(2000 + static_cast<std::uint64_t>(f)));
    }
    retained.insert(retained.end(), fold_hard.begin(), fold_hard.end());
  }
  return retained;
}

std::vector<SupervisedExample> curate_twice_hard(
    const corpus::Corpus& corpus, int folds, const CurationPlan& plan,
    std::uint64_t seed, std::vector<CurationRecord>* report, int feature_dim) {
  std::vector<CurationRecord> arena_report;
  auto arena = curate_arena(corpus, folds, plan, seed, &arena_report,
                            feature_dim);

  // Hard = what arena retained beyond guaranteed-kept fold 1.
  std::set<std::string> hard_ids;
  for (const auto& rec : arena_report) {
    if (rec.fold > 1 && rec.retained) hard_ids.insert(rec.id);
  }

  std::vector<SupervisedExample> out;
  out.reserve(corpus.problems.size());
  const int fdim = feature_dim;
  for (const auto& p : corpus.problems) {
    double w = hard_ids.count(p.id) ? 2.0 : 1.0;
    out.push_back(make_example(p, fdim, w));
  }
  if (report) {
    *report = arena_report;
    for (auto& rec : *report) {
      rec.weight = hard_ids.count(rec.id) ? 2.0 : 1.0;
      rec.retained = true;  // twice-hard covers the full corpus
    }
  }
  return out;
}

policy::PolicyParams run_warmstart(const corpus::Corpus& corpus,
                                   const CurationPlan& plan,
                                   const policy::PolicyDims& dims,
                                   std::uint64_t seed,
                                   std::vector<CurationRecord>* report) {
  std::vector<SupervisedExample> examples;
  switch (plan.strategy) {
    case Strategy::kBasic:
      examples = curate_basic(corpus, dims.feature_dim);
      if (report) {
        for (const auto& ex : examples) {
          report->push_back({ex.problem_id, 0, -1, true, ex.weight});
        }
      }
      break;
    case Strategy::kArena:
      examples = curate_arena(corpus, plan.folds, plan, seed, report,
                              dims.feature_dim);
      break;
    case Strategy::kTwiceHard:
      examples = curate_twice_hard(corpus, plan.folds, plan, seed, report,
                                   dims.feature_dim);
      break;
  }

  PolicyParams params = PolicyParams::zero_init(dims);
  train_examples(params, examples, plan.epochs, plan.learning_rate,
                 plan.batch_size,
                 RngKey::root(seed, purpose::kWarmstart));
  return params;
}

void save_curation_report(const std::vector<CurationRecord>& records,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open curation report for writing: " + path);
  out << nlohmann::ordered_json{{"schema", "curation-v1"}}.dump() << '\n';
  for (const auto& rec : records) {
    nlohmann::ordered_json j{
        {"id", rec.id},
        {"fold", rec.fold},
        {"probe_pass_count", rec.probe_pass_count},
        {"retained", rec.retained},
        {"weight", rec.weight},
    };
    out << j.dump() << '\n';
  }
}

}  // namespace rlvr::warmstart
