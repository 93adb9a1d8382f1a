#include "rlvr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rlvr/judge.hpp"
#include "rlvr/parallel.hpp"

namespace rlvr::metrics {

namespace {

// C(n, k) or 0 on 64-bit overflow.
std::uint64_t binomial_u64(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 result = 1;
  for (int i = 1; i <= k; ++i) {
    // result * (n-k+i) is always divisible by i at this point.
    result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (result > UINT64_MAX) return 0;
  }
  return static_cast<std::uint64_t>(result);
}

}  // namespace

double pass_at_k(int n, int c, int k) {
  if (n < 0 || c < 0 || c > n || k < 1 || k > n) {
    throw DomainError("pass_at_k requires 0 <= c <= n and 1 <= k <= n");
  }
  if (c == 0) return 0.0;
  if (n - c < k) return 1.0;  // every k-subset contains a passing sample

  std::uint64_t fail = binomial_u64(n - c, k);
  std::uint64_t total = binomial_u64(n, k);
  if (fail != 0 && total != 0) {
    return 1.0 - static_cast<double>(fail) / static_cast<double>(total);
  }
  // Log-space fallback: C(n-c,k)/C(n,k) = prod_{i=0}^{k-1} (n-c-i)/(n-i).
  double log_ratio = 0.0;
  for (int i = 0; i < k; ++i) {
    log_ratio += std::log(static_cast<double>(n - c - i)) -
                 std::log(static_cast<double>(n - i));
  }
  return 1.0 - std::exp(log_ratio);
}

std::vector<EvalResult> evaluate(
    const policy::PolicyParams& params,
    const std::vector<const corpus::Problem*>& problems, int n_samples,
    const std::vector<int>& ks, double temperature, int t_max, RngKey key,
    int workers, bool greedy) {
  for (int k : ks) {
    if (k > n_samples) throw DomainError("requested k exceeds n_samples");
  }
  std::vector<EvalResult> results(problems.size());
  parallel_for(static_cast<int>(problems.size()), workers, [&](int i) {
    auto idx = static_cast<std::size_t>(i);
    const corpus::Problem& problem = *problems[idx];
    auto features = policy::problem_features(problem, params.dims.feature_dim);
    EvalResult r;
    r.id = problem.id;
    r.n = n_samples;
    for (int s = 0; s < n_samples; ++s) {
      lang::Program program;
      if (greedy) {
        program = policy::greedy_decode(params, features, t_max);
      } else {
        RngStream rng =
            key.child(idx).child(static_cast<std::uint64_t>(s)).stream();
        program = policy::sample(params, features, temperature, t_max, rng)
                      .program;
      }
      if (judge::judge(program, problem).all_passed) ++r.c;
    }
    r.avg_at_1 = static_cast<double>(r.c) / static_cast<double>(r.n);
    for (int k : ks) r.pass_at_k[k] = pass_at_k(r.n, r.c, k);
    results[idx] = std::move(r);
  });
  return results;
}

double repetition_rate(const lang::Program& program) {
  const auto& t = program.tokens;
  if (t.size() < 4) return 0.0;
  std::size_t eligible = t.size() - 3;  // positions 2 .. len-2
  std::size_t repeats = 0;
  for (std::size_t i = 2; i + 1 < t.size();) {
    if (t[i] == t[i - 2] && t[i + 1] == t[i - 1]) {
      ++repeats;
      i += 2;  // the matched bigram is consumed
    } else {
      ++i;
    }
  }
  return static_cast<double>(repeats) / static_cast<double>(eligible);
}

std::vector<ClusterTrace> cluster_trace(
    const std::map<std::string, double>& initial_pass_rates,
    const std::map<std::string, std::vector<double>>& per_step_pass_rates,
    const std::vector<double>& bucket_edges) {
  if (bucket_edges.size() < 2 || bucket_edges.front() != 0.0 ||
      bucket_edges.back() != 1.0 ||
      !std::is_sorted(bucket_edges.begin(), bucket_edges.end())) {
    throw DomainError("bucket edges must strictly increase and span [0, 1]");
  }
  std::size_t buckets = bucket_edges.size() - 1;
  std::vector<ClusterTrace> traces(buckets);
  std::vector<std::vector<const std::vector<double>*>> members(buckets);

  for (std::size_t b = 0; b < buckets; ++b) {
    traces[b].lo = bucket_edges[b];
    traces[b].hi = bucket_edges[b + 1];
    char buf[48];
    std::snprintf(buf, sizeof buf, "[%g,%g%c", bucket_edges[b],
                  bucket_edges[b + 1], b + 1 == buckets ? ']' : ')');
    traces[b].label = buf;
  }

  for (const auto& [id, rate] : initial_pass_rates) {
    auto series_it = per_step_pass_rates.find(id);
    if (series_it == per_step_pass_rates.end()) continue;
    std::size_t b = buckets - 1;
    for (std::size_t i = 0; i + 1 < bucket_edges.size(); ++i) {
      if (rate < bucket_edges[i + 1]) {
        b = i;
        break;
      }
    }
    members[b].push_back(&series_it->second);
  }

  for (std::size_t b = 0; b < buckets; ++b) {
    traces[b].member_count = static_cast<int>(members[b].size());
    if (members[b].empty()) continue;  // bucket retained with empty series
    std::size_t steps = members[b][0]->size();
    traces[b].series.assign(steps, 0.0);
    for (const auto* series : members[b]) {
      for (std::size_t s = 0; s < steps; ++s) {
        traces[b].series[s] += (*series)[s];
      }
    }
    for (double& x : traces[b].series) {
      x /= static_cast<double>(members[b].size());
    }
  }
  return traces;
}

}  // namespace rlvr::metrics
