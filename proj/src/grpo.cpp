#include "rlvr/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rlvr/parallel.hpp"

namespace rlvr::grpo {

using policy::ParamVector;
using policy::PolicyParams;
using policy::ProblemFeatures;

std::vector<double> group_advantages(std::span<const double> rewards,
                                     double std_floor) {
  std::size_t g = rewards.size();
  std::vector<double> adv(g, 0.0);
  if (g < 2) return adv;
  bool all_equal = std::all_of(rewards.begin(), rewards.end(),
                               [&](double r) { return r == rewards[0]; });
  if (all_equal) return adv;  // exact zeros, not 0/std_floor

  double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) /
                static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);  // population variance
  double denom = std::sqrt(var) + std_floor;
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

RolloutGroup collect_group(const PolicyParams& params,
                           const corpus::Problem& problem,
                           const ProblemFeatures& features, int G, int t_max,
                           double temperature, judge::RewardMode reward_mode,
                           double std_floor, RngKey key) {
  RolloutGroup group;
  group.problem_id = problem.id;
  group.rollouts.resize(static_cast<std::size_t>(G));
  group.rewards.resize(static_cast<std::size_t>(G));
  group.old_logprobs.resize(static_cast<std::size_t>(G));
  for (int r = 0; r < G; ++r) {
    RngStream rng = key.child(static_cast<std::uint64_t>(r)).stream();
    auto seq = policy::sample(params, features, temperature, t_max, rng);
    group.old_logprobs[static_cast<std::size_t>(r)] = std::accumulate(
        seq.logprobs.begin(), seq.logprobs.end(), 0.0);
    group.rewards[static_cast<std::size_t>(r)] =
        judge::judge(seq.program, problem, reward_mode).reward;
    group.rollouts[static_cast<std::size_t>(r)] = std::move(seq);
  }
  group.advantages = group_advantages(group.rewards, std_floor);
  return group;
}

SurrogateResult clipped_surrogate(const PolicyParams& params,
                                  const PolicyParams& ref_params,
                                  const ProblemFeatures& features,
                                  const RolloutGroup& group,
                                  const GrpoConfig& config) {
  const auto& dims = params.dims;
  const std::size_t g = group.rollouts.size();
  SurrogateResult result;
  result.grad = ParamVector::zeros(dims);

  // Aggregation weights over rollouts.
  std::vector<double> weight(g, 0.0);
  if (config.aggregation == TokenAggregation::kSequenceMean) {
    for (std::size_t i = 0; i < g; ++i) weight[i] = 1.0 / static_cast<double>(g);
  } else {
    std::size_t total_tokens = 0;
    for (const auto& r : group.rollouts) total_tokens += r.program.tokens.size();
    for (std::size_t i = 0; i < g; ++i) {
      weight[i] = static_cast<double>(group.rollouts[i].program.tokens.size()) /
                  static_cast<double>(total_tokens);
    }
  }

  double objective = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const auto& seq = group.rollouts[i];
    double new_lp = policy::sequence_logprob(params, features, seq.program);
    double log_ratio = new_lp - group.old_logprobs[i];
    if (std::abs(log_ratio) > config.ratio_guard_log) {
      throw NumericalOverflow("importance ratio out of range (log ratio " +
                              std::to_string(log_ratio) + ")");
    }
    double rho = std::exp(log_ratio);
    double adv = group.advantages[i];
    double unclipped = rho * adv;
    double clipped = std::clamp(rho, 1.0 - config.clip_epsilon,
                                1.0 + config.clip_epsilon) *
                     adv;
    objective += weight[i] * std::min(unclipped, clipped);
    // The min picks the unclipped branch (or both coincide): the policy
    // gradient flows; otherwise the term is constant in the parameters.
    if (unclipped <= clipped && adv != 0.0) {
      policy::accumulate_grad_sequence_logprob(
          params, features, seq.program, -weight[i] * rho * adv, result.grad);
    }
  }

  // Exact per-step categorical KL(new || ref), averaged over all steps of
  // all rollouts in the group.
  std::size_t total_steps = 0;
  for (const auto& r : group.rollouts) total_steps += r.program.tokens.size();
  if (config.kl_coefficient > 0.0 && total_steps > 0) {
    std::vector<int> ctx;
    std::vector<double> p(static_cast<std::size_t>(dims.vocab));
    std::vector<double> q(static_cast<std::size_t>(dims.vocab));
    std::vector<double> dz(static_cast<std::size_t>(dims.vocab));
    double kl_sum = 0.0;
    double coeff = config.kl_coefficient / static_cast<double>(total_steps);
    for (const auto& r : group.rollouts) {
      for (std::size_t t = 0; t < r.program.tokens.size(); ++t) {
        policy::context_window(r.program.tokens, static_cast<int>(t),
                               dims.ctx_window, ctx);
        policy::logits(params, features, ctx, p);
        policy::softmax_inplace(p);
        policy::logits(ref_params, features, ctx, q);
        policy::softmax_inplace(q);
        double kl_step = 0.0;
        for (int v = 0; v < dims.vocab; ++v) {
          auto vi = static_cast<std::size_t>(v);
          if (p[vi] > 0.0) kl_step += p[vi] * (std::log(p[vi]) - std::log(q[vi]));
        }
        kl_step = std::max(kl_step, 0.0);
        kl_sum += kl_step;
        for (int v = 0; v < dims.vocab; ++v) {
          auto vi = static_cast<std::size_t>(v);
          dz[vi] = coeff * p[vi] *
                   (std::log(p[vi]) - std::log(q[vi]) - kl_step);
        }
        policy::accumulate_step_gradient(dims, features, ctx, dz, result.grad);
      }
    }
    result.kl = kl_sum / static_cast<double>(total_steps);
  } else if (total_steps > 0) {
    // Report KL without adding it to the loss or gradient.
    result.kl = 0.0;
  }

  result.loss = -objective + config.kl_coefficient * result.kl;
  return result;
}

StepReport train_step(PolicyParams& params, const PolicyParams& ref_params,
                      optim::OptimizerState& opt_state,
                      const std::vector<const corpus::Problem*>& batch,
                      const GrpoConfig& config, int t_max, RngKey step_key,
                      int workers) {
  if (batch.empty()) throw TrainError("train_step requires a non-empty batch");
  const std::size_t n = batch.size();

  std::vector<ProblemFeatures> features(n);
  std::vector<RolloutGroup> groups(n);
  parallel_for(static_cast<int>(n), workers, [&](int i) {
    auto idx = static_cast<std::size_t>(i);
    features[idx] =
        policy::problem_features(*batch[idx], params.dims.feature_dim);
    groups[idx] = collect_group(
        params, *batch[idx], features[idx], config.group_size, t_max,
        config.temperature, config.reward_mode, config.std_floor,
        step_key.child(idx));
  });

  StepReport report;
  double first_loss = 0.0;
  double first_kl = 0.0;
  for (int epoch = 0; epoch < config.updates_per_batch; ++epoch) {
    std::vector<SurrogateResult> results(n);
    parallel_for(static_cast<int>(n), workers, [&](int i) {
      auto idx = static_cast<std::size_t>(i);
      results[idx] = clipped_surrogate(params, ref_params, features[idx],
                                       groups[idx], config);
    });
    // Fixed-order reduction keeps results identical for any worker count.
    ParamVector grad = ParamVector::zeros(params.dims);
    double loss = 0.0;
    double kl = 0.0;
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
      grad.axpy(inv_n, results[idx].grad);
      loss += inv_n * results[idx].loss;
      kl += inv_n * results[idx].kl;
    }
    if (epoch == 0) {
      first_loss = loss;
      first_kl = kl;
    }
    optim::adam_update(params.weights, opt_state, grad, config.optimizer);
    params.mark_updated();
  }

  // Bookkeeping from the collection-time rollouts.
  double reward_sum = 0.0;
  double entropy_sum = 0.0;
  std::size_t entropy_steps = 0;
  std::size_t truncated = 0;
  std::size_t rollout_count = 0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    const RolloutGroup& grp = groups[idx];
    std::size_t solved = 0;
    for (std::size_t r = 0; r < grp.rollouts.size(); ++r) {
      reward_sum += grp.rewards[r];
      if (grp.rewards[r] == 1.0) ++solved;
      if (grp.rollouts[r].program.truncated) ++truncated;
      for (double h : grp.rollouts[r].step_entropies) entropy_sum += h;
      entropy_steps += grp.rollouts[r].step_entropies.size();
      ++rollout_count;
    }
    report.pass_rates.emplace_back(
        grp.problem_id,
        static_cast<double>(solved) / static_cast<double>(grp.rollouts.size()));
  }
  report.mean_reward = reward_sum / static_cast<double>(rollout_count);
  report.mean_entropy =
      entropy_steps == 0 ? 0.0
                         : entropy_sum / static_cast<double>(entropy_steps);
  report.truncation_rate =
      static_cast<double>(truncated) / static_cast<double>(rollout_count);
  report.loss = first_loss;
  report.kl = first_kl;
  return report;
}

}  // namespace rlvr::grpo
