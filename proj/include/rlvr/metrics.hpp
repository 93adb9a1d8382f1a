#pragma once

#include <map>
#include <string>
#include <vector>

#include "rlvr/corpus.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rng.hpp"

namespace rlvr::metrics {

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unbiased estimator 1 - C(n-c, k) / C(n, k). Exact integer arithmetic
// while the binomials fit 64 bits, log-space beyond that (fine to n = 1e4).
double pass_at_k(int n, int c, int k);

struct EvalResult {
  std::string id;
  int n = 0;  // samples drawn
  int c = 0;  // samples passing
  std::map<int, double> pass_at_k;
  double avg_at_1 = 0.0;  // c / n
};

// Samples n programs per problem at the given temperature, judges each,
// and fills the estimators. Never updates params. greedy = true replaces
// sampling with n copies of the greedy decode.
std::vector<EvalResult> evaluate(
    const policy::PolicyParams& params,
    const std::vector<const corpus::Problem*>& problems, int n_samples,
    const std::vector<int>& ks, double temperature, int t_max, RngKey key,
    int workers = 1, bool greedy = false);

// Fraction of token positions starting a bigram equal to the immediately
// preceding one, under a greedy non-overlapping convention: a matching
// position consumes its bigram, and the scan resumes two tokens later.
// Eligible positions are 2..len-2; programs shorter than 4 tokens score 0.
double repetition_rate(const lang::Program& program);

struct ClusterTrace {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
  int member_count = 0;
  std::vector<double> series;  // empty when the bucket has no members
};

// Buckets problems by initial pass rate and averages their per-step series.
std::vector<ClusterTrace> cluster_trace(
    const std::map<std::string, double>& initial_pass_rates,
    const std::map<std::string, std::vector<double>>& per_step_pass_rates,
    const std::vector<double>& bucket_edges);

}  // namespace rlvr::metrics
