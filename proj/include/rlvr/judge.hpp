#pragma once

#include <vector>

#include "rlvr/corpus.hpp"
#include "rlvr/lang.hpp"

namespace rlvr::judge {

enum class RewardMode { kBinary, kFractional };

struct CaseResult {
  bool passed = false;
  lang::ExecStatus status = lang::ExecStatus::kOk;
};

struct Verdict {
  std::vector<CaseResult> per_case;
  double reward = 0.0;
  bool all_passed = false;
};

// Executes the program on every hidden case. A case passes iff the run
// ends Ok and the outputs equal the expected outputs exactly. Truncated
// programs get reward 0 in both modes.
Verdict judge(const lang::Program& program, const corpus::Problem& problem,
              RewardMode mode = RewardMode::kBinary);

// Element i equals judge(programs[i], ...); input order is preserved for
// any worker count.
std::vector<Verdict> judge_batch(const std::vector<lang::Program>& programs,
                                 const corpus::Problem& problem,
                                 RewardMode mode = RewardMode::kBinary,
                                 int workers = 1);

}  // namespace rlvr::judge
