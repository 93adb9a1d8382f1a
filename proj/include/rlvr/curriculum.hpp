#pragma once

#include <map>
#include <string>
#include <vector>

#include "rlvr/corpus.hpp"
#include "rlvr/grpo.hpp"
#include "rlvr/warmstart.hpp"

namespace rlvr::curriculum {

struct PoolTooSmall : TrainError {
  using TrainError::TrainError;
};

struct PhaseSpec {
  int hardest_count = 0;
  int step_budget = 0;
};

struct StageConfig {
  int stage = 1;
  std::vector<std::string> pool;  // problem ids; empty = whole corpus
  int group_size = 8;
  int t_max = 16;
  int steps = 32;          // stage 1 only
  int batch_size = 8;      // stage 1 only; stage 2 trains the full active set
  double temperature = 1.0;
  // Stage 2 only. Empty = scale the 72/50/25-over-175 shape to the pool.
  std::vector<PhaseSpec> phases;
  // Refresh retention pass rates with fresh probe rollouts at phase
  // boundaries instead of the last training-step statistics.
  bool fresh_probe_refresh = false;
};

struct RetentionEvent {
  int phase = 0;
  std::vector<std::pair<std::string, double>> retained;
  std::vector<std::pair<std::string, double>> dropped;
};

struct StageTrace {
  std::vector<grpo::StepReport> steps;
  std::vector<RetentionEvent> retentions;
};

// Lowest-pass-rate K ids; ties broken by lexicographic id.
std::vector<std::string> rank_hardest(
    const std::map<std::string, double>& pass_rate, int k);

// Built-in phase schedule shape scaled proportionally to the pool size.
std::vector<PhaseSpec> default_phase_schedule(int pool_size);

StageTrace run_stage1(policy::PolicyParams& params,
                      const corpus::Corpus& corpus, const StageConfig& config,
                      const grpo::GrpoConfig& grpo_config, std::uint64_t seed,
                      int workers = 1);

StageTrace run_stage2(policy::PolicyParams& params,
                      const corpus::Corpus& corpus, const StageConfig& config,
                      const grpo::GrpoConfig& grpo_config, std::uint64_t seed,
                      int workers = 1);

struct PipelineConfig {
  warmstart::CurationPlan warmstart_plan;
  StageConfig stage1;
  StageConfig stage2;
  grpo::GrpoConfig grpo_stage1;
  grpo::GrpoConfig grpo_stage2;
  policy::PolicyDims dims;
  bool skip_warmstart = false;
  bool skip_stage1 = false;
  bool skip_stage2 = false;
};

struct PipelineResult {
  policy::PolicyParams params;
  StageTrace stage1_trace;
  StageTrace stage2_trace;
  std::vector<warmstart::CurationRecord> curation;
  // Params snapshot after each executed stage, in order.
  std::vector<std::pair<std::string, policy::PolicyParams>> checkpoints;
};

// warmstart -> stage 1 -> stage 2, any stage skippable for ablations.
PipelineResult run_pipeline(const corpus::Corpus& corpus,
                            const PipelineConfig& config, std::uint64_t seed,
                            int workers = 1);

void save_retention_log(const std::vector<RetentionEvent>& events,
                        const std::string& path);

}  // namespace rlvr::curriculum
