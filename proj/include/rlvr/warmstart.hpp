#pragma once

#include <span>
#include <string>
#include <vector>

#include "rlvr/corpus.hpp"
#include "rlvr/optim.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rng.hpp"

namespace rlvr::warmstart {

struct SupervisedExample {
  std::string problem_id;
  lang::Program target;  // oracle minimal reference solution
  double weight = 1.0;
  policy::ProblemFeatures features;
};

enum class Strategy { kBasic, kArena, kTwiceHard };

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

struct CurationPlan {
  Strategy strategy = Strategy::kTwiceHard;
  int folds = 5;  // arena / twice_hard only
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 8;
  // Probe settings for arena mining: a problem counts as hard when none of
  // probe_rollouts samples passes.
  int probe_rollouts = 8;
  int probe_epochs = 12;
};

// One weighted cross-entropy step; returns the pre-update mean loss
// -sum(w * logprob(target)) / sum(w).
double supervised_step(policy::PolicyParams& params,
                       optim::OptimizerState& opt_state,
                       std::span<const SupervisedExample> batch,
                       const optim::AdamConfig& optimizer);

struct CurationRecord {
  std::string id;
  int fold = 0;
  int probe_pass_count = -1;  // -1: never probed (seed fold / basic)
  bool retained = false;
  double weight = 0.0;
};

// One example per problem, weight 1. Rejects duplicated ids.
std::vector<SupervisedExample> curate_basic(const corpus::Corpus& corpus,
                                            int feature_dim = 64);

// Fold-wise hard-sample mining: train a probe on fold 1, keep only the
// problems later folds fail on, growing the probe as it goes.
std::vector<SupervisedExample> curate_arena(
    const corpus::Corpus& corpus, int folds, const CurationPlan& plan,
    std::uint64_t seed, std::vector<CurationRecord>* report = nullptr,
    int feature_dim = 64);

// Full corpus with arena-identified hard examples at weight 2, rest at 1.
std::vector<SupervisedExample> curate_twice_hard(
    const corpus::Corpus& corpus, int folds, const CurationPlan& plan,
    std::uint64_t seed, std::vector<CurationRecord>* report = nullptr,
    int feature_dim = 64);

// Curates per the plan's strategy and trains from zero-init params.
policy::PolicyParams run_warmstart(
    const corpus::Corpus& corpus, const CurationPlan& plan,
    const policy::PolicyDims& dims, std::uint64_t seed,
    std::vector<CurationRecord>* report = nullptr);

void save_curation_report(const std::vector<CurationRecord>& records,
                          const std::string& path);

}  // namespace rlvr::warmstart
