#include "rlvr/judge.hpp"

#include "rlvr/parallel.hpp"

namespace rlvr::judge {

Verdict judge(const lang::Program& program, const corpus::Problem& problem,
              RewardMode mode) {
  Verdict v;
  v.per_case.resize(problem.hidden_cases.size());
  if (program.truncated) {
    // Truncation is a failure regardless of partial outputs.
    for (std::size_t i = 0; i < problem.hidden_cases.size(); ++i) {
      v.per_case[i] = {false, lang::ExecStatus::kTruncated};
    }
    v.reward = 0.0;
    v.all_passed = false;
    return v;
  }
  std::size_t passed = 0;
  for (std::size_t i = 0; i < problem.hidden_cases.size(); ++i) {
    const corpus::TestCase& tc = problem.hidden_cases[i];
    lang::ExecOutcome outcome = lang::execute(program, tc.inputs);
    bool ok = outcome.status == lang::ExecStatus::kOk &&
              outcome.outputs == tc.expected_outputs;
    v.per_case[i] = {ok, outcome.status};
    if (ok) ++passed;
  }
  v.all_passed = passed == problem.hidden_cases.size();
  if (mode == RewardMode::kBinary) {
    v.reward = v.all_passed ? 1.0 : 0.0;
  } else {
    v.reward = problem.hidden_cases.empty()
                   ? 0.0
                   : static_cast<double>(passed) /
                         static_cast<double>(problem.hidden_cases.size());
  }
  return v;
}

std::vector<Verdict> judge_batch(const std::vector<lang::Program>& programs,
                                 const corpus::Problem& problem,
                                 RewardMode mode, int workers) {
  std::vector<Verdict> verdicts(programs.size());
  parallel_for(static_cast<int>(programs.size()), workers, [&](int i) {
    verdicts[static_cast<std::size_t>(i)] =
        judge(programs[static_cast<std::size_t>(i)], problem, mode);
  });
  return verdicts;
}

}  // namespace rlvr::judge
