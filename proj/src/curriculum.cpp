#include "rlvr/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "rlvr/errors.hpp"
#include "rlvr/parallel.hpp"

namespace rlvr::curriculum {

using policy::PolicyParams;

namespace {

std::vector<const corpus::Problem*> resolve_pool(
    const corpus::Corpus& corpus, const std::vector<std::string>& ids) {
  std::vector<const corpus::Problem*> pool;
  if (ids.empty()) {
    for (const auto& p : corpus.problems) pool.push_back(&p);
    return pool;
  }
  for (const auto& id : ids) {
    const corpus::Problem* p = corpus.find(id);
    if (!p) throw TrainError("pool references unknown problem id '" + id + "'");
    pool.push_back(p);
  }
  return pool;
}

}  // namespace

std::vector<std::string> rank_hardest(
    const std::map<std::string, double>& pass_rate, int k) {
  if (k > static_cast<int>(pass_rate.size())) {
    throw TrainError("rank_hardest: K exceeds pass-rate map size");
  }
  std::vector<std::pair<std::string, double>> entries(pass_rate.begin(),
                                                      pass_rate.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second < b.second;
                     return a.first < b.first;
                   });
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(entries[static_cast<std::size_t>(i)].first);
  return out;
}

std::vector<PhaseSpec> default_phase_schedule(int pool_size) {
  // Shape: 72/50/25 hardest over a 175-problem pool, budgets 64/32/32.
  const double counts[3] = {72.0, 50.0, 25.0};
  const int budgets[3] = {64, 32, 32};
  std::vector<PhaseSpec> phases;
  for (int p = 0; p < 3; ++p) {
    int k = static_cast<int>(std::lround(pool_size * counts[p] / 175.0));
    if (k < 1) {
      throw PoolTooSmall("stage-2 pool of " + std::to_string(pool_size) +
                         " scales phase " + std::to_string(p + 1) +
                         " below one problem");
    }
    phases.push_back({k, budgets[p]});
  }
  for (int p = 1; p < 3; ++p) {
    if (phases[static_cast<std::size_t>(p)].hardest_count >=
        phases[static_cast<std::size_t>(p - 1)].hardest_count) {
      throw PoolTooSmall("stage-2 pool too small for strictly decreasing phases");
    }
  }
  return phases;
}

StageTrace run_stage1(PolicyParams& params, const corpus::Corpus& corpus,
                      const StageConfig& config,
                      const grpo::GrpoConfig& grpo_config, std::uint64_t seed,
                      int workers) {
  auto pool = resolve_pool(corpus, config.pool);
  if (pool.empty()) throw TrainError("stage 1 pool is empty");

  PolicyParams ref_params = params;  // frozen for the stage
  optim::OptimizerState opt_state = optim::OptimizerState::zeros(params.dims);
  grpo::GrpoConfig gcfg = grpo_config;
  gcfg.group_size = config.group_size;
  gcfg.temperature = config.temperature;

  RngKey stage_key = RngKey::root(seed, purpose::kRollout).child(1);
  StageTrace trace;
  for (int step = 0; step < config.steps; ++step) {
    // Deterministic uniform batch draw per step.
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    RngStream batch_rng = stage_key.child(static_cast<std::uint64_t>(step))
                              .child(0xba7c)
                              .stream();
    batch_rng.shuffle(order);
    std::size_t batch_size =
        std::min(order.size(), static_cast<std::size_t>(config.batch_size));
    std::vector<const corpus::Problem*> batch;
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(pool[order[i]]);

    grpo::StepReport report = grpo::train_step(
        params, ref_params, opt_state, batch, gcfg, config.t_max,
        stage_key.child(static_cast<std::uint64_t>(step)), workers);
    report.stage = 1;
    report.phase = 0;
    report.step = step;
    trace.steps.push_back(std::move(report));
  }
  return trace;
}

namespace {

std::map<std::string, double> probe_pass_rates(
    const PolicyParams& params,
    const std::vector<const corpus::Problem*>& pool, int group_size, int t_max,
    double temperature, RngKey key, int workers) {
  std::vector<double> rates(pool.size(), 0.0);
  parallel_for(static_cast<int>(pool.size()), workers, [&](int i) {
    auto idx = static_cast<std::size_t>(i);
    auto features = policy::problem_features(*pool[idx], params.dims.feature_dim);
    auto group = grpo::collect_group(params, *pool[idx], features, group_size,
                                     t_max, temperature,
                                     judge::RewardMode::kBinary, 1e-6,
                                     key.child(idx));
    std::size_t solved = 0;
    for (double r : group.rewards) {
      if (r == 1.0) ++solved;
    }
    rates[idx] = static_cast<double>(solved) /
                 static_cast<double>(group.rewards.size());
  });
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < pool.size(); ++i) out[pool[i]->id] = rates[i];
  return out;
}

}  // namespace

StageTrace run_stage2(PolicyParams& params, const corpus::Corpus& corpus,
                      const StageConfig& config,
                      const grpo::GrpoConfig& grpo_config, std::uint64_t seed,
                      int workers) {
  auto pool = resolve_pool(corpus, config.pool);
  if (pool.empty()) throw TrainError("stage 2 pool is empty");

  std::vector<PhaseSpec> phases =
      config.phases.empty() ? default_phase_schedule(static_cast<int>(pool.size()))
                            : config.phases;
  for (const auto& phase : phases) {
    if (phase.hardest_count < 1) throw PoolTooSmall("phase K must be >= 1");
    if (phase.hardest_count > static_cast<int>(pool.size())) {
      throw PoolTooSmall("phase K exceeds stage-2 pool size");
    }
  }

  PolicyParams ref_params = params;
  optim::OptimizerState opt_state = optim::OptimizerState::zeros(params.dims);
  grpo::GrpoConfig gcfg = grpo_config;
  gcfg.group_size = config.group_size;
  gcfg.temperature = config.temperature;

  RngKey stage_key = RngKey::root(seed, purpose::kRollout).child(2);

  // Initial pass rates from a probe pass over the full stage-2 pool.
  std::map<std::string, double> pass_rate = probe_pass_rates(
      params, pool, config.group_size, config.t_max, config.temperature,
      stage_key.child(0xf00d), workers);

  StageTrace trace;
  int global_step = 0;
  for (std::size_t phase_idx = 0; phase_idx < phases.size(); ++phase_idx) {
    const PhaseSpec& phase = phases[phase_idx];

    if (config.fresh_probe_refresh && phase_idx > 0) {
      pass_rate = probe_pass_rates(params, pool, config.group_size,
                                   config.t_max, config.temperature,
                                   stage_key.child(0xf00d).child(phase_idx),
                                   workers);
    }

    std::vector<std::string> active =
        rank_hardest(pass_rate, phase.hardest_count);
    std::set<std::string> active_set(active.begin(), active.end());

    RetentionEvent event;
    event.phase = static_cast<int>(phase_idx) + 1;
    for (const auto& [id, rate] : pass_rate) {
      if (active_set.count(id)) {
        event.retained.emplace_back(id, rate);
      } else {
        event.dropped.emplace_back(id, rate);
      }
    }
    trace.retentions.push_back(std::move(event));

    std::vector<const corpus::Problem*> batch;
    for (const auto& id : active) batch.push_back(corpus.find(id));

    for (int step = 0; step < phase.step_budget; ++step, ++global_step) {
      grpo::StepReport report = grpo::train_step(
          params, ref_params, opt_state, batch, gcfg, config.t_max,
          stage_key.child(static_cast<std::uint64_t>(global_step) + 1),
          workers);
      report.stage = 2;
      report.phase = static_cast<int>(phase_idx) + 1;
      report.step = global_step;
      // Last measurement wins (running window of 1).
      for (const auto& [id, rate] : report.pass_rates) pass_rate[id] = rate;
      trace.steps.push_back(std::move(report));
    }
  }
  return trace;
}

PipelineResult run_pipeline(const corpus::Corpus& corpus,
                            const PipelineConfig& config, std::uint64_t seed,
                            int workers) {
  PipelineResult result{PolicyParams::zero_init(config.dims), {}, {}, {}, {}};

  if (!config.skip_warmstart) {
    result.params = warmstart::run_warmstart(corpus, config.warmstart_plan,
                                             config.dims, seed,
                                             &result.curation);
    result.checkpoints.emplace_back("warmstart", result.params);
  }
  if (!config.skip_stage1) {
    result.stage1_trace = run_stage1(result.params, corpus, config.stage1,
                                     config.grpo_stage1, seed, workers);
    result.checkpoints.emplace_back("stage1", result.params);
  }
  if (!config.skip_stage2) {
    result.stage2_trace = run_stage2(result.params, corpus, config.stage2,
                                     config.grpo_stage2, seed, workers);
    result.checkpoints.emplace_back("stage2", result.params);
  }
  return result;
}

void save_retention_log(const std::vector<RetentionEvent>& events,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open retention log for writing: " + path);
  out << nlohmann::ordered_json{{"schema", "retention-v1"}}.dump() << '\n';
  for (const auto& event : events) {
    nlohmann::ordered_json retained = nlohmann::ordered_json::array();
    for (const auto& [id, rate] : event.retained) {
      retained.push_back({{"id", id}, {"pass_rate", rate}});
    }
    nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
    for (const auto& [id, rate] : event.dropped) {
      dropped.push_back({{"id", id}, {"pass_rate", rate}});
    }
    nlohmann::ordered_json j{
        {"phase", event.phase},
        {"retained", retained},
        {"dropped", dropped},
    };
    out << j.dump() << '\n';
  }
}

}  // namespace rlvr::curriculum
