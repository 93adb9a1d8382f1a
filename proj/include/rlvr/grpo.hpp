#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rlvr/corpus.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/judge.hpp"
#include "rlvr/optim.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rng.hpp"

namespace rlvr::grpo {

struct NumericalOverflow : TrainError {
  using TrainError::TrainError;
};

struct RolloutGroup {
  std::string problem_id;
  std::vector<policy::SampledSequence> rollouts;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<double> old_logprobs;  // behavior-policy sequence logprobs
};

enum class TokenAggregation { kSequenceMean, kTokenMean };

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double kl_coefficient = 0.0;
  double std_floor = 1e-6;
  optim::AdamConfig optimizer;
  int updates_per_batch = 1;
  TokenAggregation aggregation = TokenAggregation::kSequenceMean;
  judge::RewardMode reward_mode = judge::RewardMode::kBinary;
  double temperature = 1.0;
  // Ratios with |log rho| beyond this signal a stale old_logprob.
  double ratio_guard_log = 30.0;
};

// A_i = (r_i - mean) / (population_std + std_floor); all-equal rewards map
// to the exact zero vector (skip rule).
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double std_floor);

// Samples G rollouts, judges them, and fills rewards/advantages/old
// logprobs. Rollout r uses the stream key.child(r), so results do not
// depend on scheduling.
RolloutGroup collect_group(const policy::PolicyParams& params,
                           const corpus::Problem& problem,
                           const policy::ProblemFeatures& features, int G,
                           int t_max, double temperature,
                           judge::RewardMode reward_mode, double std_floor,
                           RngKey key);

struct SurrogateResult {
  double loss = 0.0;  // -objective + beta * kl
  double kl = 0.0;    // exact per-step categorical KL(new || ref), averaged
  policy::ParamVector grad;
};

// PPO-style clipped surrogate over one rollout group, with optional exact
// KL-to-reference penalty. The gradient is exact; rollouts on the clipped
// branch contribute zero policy gradient.
SurrogateResult clipped_surrogate(const policy::PolicyParams& params,
                                  const policy::PolicyParams& ref_params,
                                  const policy::ProblemFeatures& features,
                                  const RolloutGroup& group,
                                  const GrpoConfig& config);

struct StepReport {
  int stage = 0;
  int phase = 0;
  int step = 0;
  double mean_reward = 0.0;
  double mean_entropy = 0.0;
  double truncation_rate = 0.0;
  double loss = 0.0;
  double kl = 0.0;
  // Fraction of rollouts that passed all hidden cases, per problem.
  std::vector<std::pair<std::string, double>> pass_rates;
};

/// One GRPO step: collect a group per problem, compute advantages, apply
// updates_per_batch optimizer updates of the batch-mean surrogate.
StepReport train_step(policy::PolicyParams& params,
                      const policy::PolicyParams& ref_params,
                      optim::OptimizerState& opt_state,
                      const std::vector<const corpus::Problem*>& batch,
                      const GrpoConfig& config, int t_max, RngKey step_key,
                      int workers = 1);

}  // namespace rlvr::grpo
