#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "rlvr/metrics.hpp"

using namespace rlvr;
using namespace rlvr::metrics;

namespace {

// Exhaustive subset oracle: fraction of k-subsets of n samples (c passing)
// that contain at least one passing sample.
double pass_at_k_oracle(int n, int c, int k) {
  std::uint64_t total = 0, with_pass = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    ++total;
    // Samples 0..c-1 are the passing ones.
    if (c > 0 && (mask & ((1u << c) - 1)) != 0) ++with_pass;
  }
  return 1.0 - static_cast<double>(total - with_pass) /
                   static_cast<double>(total);
}

lang::Program prog(std::vector<int> tokens) {
  lang::Program p;
  p.tokens = std::move(tokens);
  p.truncated = p.tokens.empty() || p.tokens.back() != lang::kEos;
  return p;
}

}  // namespace

TEST_CASE("pass_at_k pinned examples") {
  CHECK(pass_at_k(10, 10, 1) == 1.0);
  CHECK(pass_at_k(10, 0, 10) == 0.0);
  CHECK(pass_at_k(10, 3, 5) == doctest::Approx(1.0 - 21.0 / 252.0).epsilon(1e-9));
}

TEST_CASE("pass_at_k equals exhaustive subset enumeration for n <= 12") {
  for (int n = 1; n <= 12; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        CHECK(pass_at_k(n, c, k) == pass_at_k_oracle(n, c, k));
      }
    }
  }
}

TEST_CASE("pass_at_k monotonicity and pass@1 identity") {
  for (int n : {5, 20, 100}) {
    for (int c = 0; c <= n; ++c) {
      CHECK(pass_at_k(n, c, 1) ==
            doctest::Approx(static_cast<double>(c) / n).epsilon(1e-12));
      for (int k = 2; k <= n; ++k) {
        CHECK(pass_at_k(n, c, k) >= pass_at_k(n, c, k - 1) - 1e-12);
      }
    }
    for (int k = 1; k <= n; ++k) {
      for (int c = 1; c <= n; ++c) {
        CHECK(pass_at_k(n, c, k) >= pass_at_k(n, c - 1, k) - 1e-12);
      }
    }
  }
  // c >= 1 makes pass@n certain.
  for (int n : {3, 8, 11}) CHECK(pass_at_k(n, 1, n) == 1.0);
}

TEST_CASE("pass_at_k survives large n without overflow") {
  double v = pass_at_k(10000, 17, 100);
  CHECK(v > 0.0);
  CHECK(v < 1.0);
  // Log-space path agrees with the exact path where both apply.
  CHECK(pass_at_k(60, 2, 30) == doctest::Approx(1.0 - (30.0 * 29.0) / (60.0 * 59.0))
                                    .epsilon(1e-12));
}

TEST_CASE("pass_at_k rejects invalid arguments") {
  CHECK_THROWS_AS(pass_at_k(10, 11, 1), DomainError);
  CHECK_THROWS_AS(pass_at_k(10, -1, 1), DomainError);
  CHECK_THROWS_AS(pass_at_k(10, 5, 0), DomainError);
  CHECK_THROWS_AS(pass_at_k(10, 5, 11), DomainError);
}

TEST_CASE("repetition_rate pinned examples") {
  using namespace lang;
  CHECK(repetition_rate(prog({kIn, kOut, kIn, kOut, kIn, kOut, kEos})) == 0.5);
  CHECK(repetition_rate(prog({kIn, kIn, kAdd, kOut, kEos})) == 0.0);
  CHECK(repetition_rate(prog({kIn, kOut, kEos})) == 0.0);  // too short
  CHECK(repetition_rate(prog({kIn})) == 0.0);

  // Pure ABAB patterns: greedy non-overlapping counting consumes every
  // other bigram, so the rate is floor((len-2)/2) / (len-3).
  auto abab = [&](int len) {
    std::vector<int> t;
    for (int i = 0; i < len; ++i) t.push_back(i % 2 ? kOut : kIn);
    return prog(t);
  };
  CHECK(repetition_rate(abab(8)) == doctest::Approx(3.0 / 5.0));
  CHECK(repetition_rate(abab(24)) == doctest::Approx(11.0 / 21.0));
  CHECK(repetition_rate(abab(24)) > 0.5);
}

TEST_CASE("cluster_trace assigns singletons to the right bucket") {
  std::map<std::string, double> initial{{"p", 0.3}};
  std::map<std::string, std::vector<double>> series{{"p", {0.3, 0.4, 0.5}}};
  auto traces = cluster_trace(initial, series, {0.0, 0.25, 0.75, 1.0});
  REQUIRE(traces.size() == 3);
  CHECK(traces[0].member_count == 0);
  CHECK(traces[0].series.empty());
  CHECK(traces[1].member_count == 1);
  CHECK(traces[1].series == std::vector<double>{0.3, 0.4, 0.5});
  CHECK(traces[2].member_count == 0);
}

TEST_CASE("cluster_trace degenerate all-zero rates populate one bucket") {
  std::map<std::string, double> initial;
  std::map<std::string, std::vector<double>> series;
  for (int i = 0; i < 5; ++i) {
    std::string id = "p" + std::to_string(i);
    initial[id] = 0.0;
    series[id] = {0.0, static_cast<double>(i) / 10.0};
  }
  auto traces = cluster_trace(initial, series, {0.0, 0.25, 0.75, 1.0});
  CHECK(traces[0].member_count == 5);
  CHECK(traces[1].member_count == 0);
  CHECK(traces[2].member_count == 0);
  CHECK(traces[0].series[1] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("cluster means match a brute-force average") {
  RngStream rng(77);
  std::map<std::string, double> initial;
  std::map<std::string, std::vector<double>> series;
  const int steps = 6;
  for (int i = 0; i < 40; ++i) {
    std::string id = "p" + std::to_string(i);
    initial[id] = rng.next_unit();
    std::vector<double> s;
    for (int t = 0; t < steps; ++t) s.push_back(rng.next_unit());
    series[id] = s;
  }
  std::vector<double> edges{0.0, 0.25, 0.75, 1.0};
  auto traces = cluster_trace(initial, series, edges);

  for (std::size_t b = 0; b < traces.size(); ++b) {
    std::vector<double> sum(steps, 0.0);
    int count = 0;
    for (const auto& [id, r] : initial) {
      bool in_bucket = r >= edges[b] && (r < edges[b + 1] || b + 1 == traces.size());
      if (!in_bucket) continue;
      ++count;
      for (int t = 0; t < steps; ++t) sum[static_cast<std::size_t>(t)] += series[id][static_cast<std::size_t>(t)];
    }
    CHECK(traces[b].member_count == count);
    for (int t = 0; t < steps && count > 0; ++t) {
      CHECK(std::abs(traces[b].series[static_cast<std::size_t>(t)] -
                     sum[static_cast<std::size_t>(t)] / count) <= 1e-12);
    }
  }
}

TEST_CASE("cluster_trace validates bucket edges") {
  std::map<std::string, double> initial{{"p", 0.5}};
  std::map<std::string, std::vector<double>> series{{"p", {0.5}}};
  CHECK_THROWS_AS(cluster_trace(initial, series, {0.0, 0.5}), DomainError);
  CHECK_THROWS_AS(cluster_trace(initial, series, {0.2, 1.0}), DomainError);
  CHECK_THROWS_AS(cluster_trace(initial, series, {1.0}), DomainError);
}

TEST_CASE("evaluate: a policy forced onto IN OUT EOS aces identity problems") {
  corpus::Problem p;
  p.id = "identity";
  p.public_cases = {{{1}, {1}}, {{2}, {2}}, {{3}, {3}}};
  p.hidden_cases = {{{4}, {4}}, {{-5}, {-5}}, {{0}, {0}}};

  policy::PolicyDims dims;
  policy::PolicyParams params = policy::PolicyParams::zero_init(dims);
  // Drive the most-recent-token context slot hard toward the reference path
  // BOS -> IN -> OUT -> EOS.
  auto ctx_weight = [&](int prev, int next) -> double& {
    std::size_t slot = static_cast<std::size_t>(dims.ctx_window - 1);
    std::size_t row = slot * static_cast<std::size_t>(dims.vocab + 1) +
                      static_cast<std::size_t>(prev);
    return params.weights.ctx[row * static_cast<std::size_t>(dims.vocab) +
                              static_cast<std::size_t>(next)];
  };
  ctx_weight(lang::kBosId, lang::kIn) = 50.0;
  ctx_weight(lang::kIn, lang::kOut) = 50.0;
  ctx_weight(lang::kOut, lang::kEos) = 50.0;

  auto results = evaluate(params, {&p}, 10, {1, 10}, 1.0, dims.t_max,
                          RngKey::root(1, purpose::kEval));
  REQUIRE(results.size() == 1);
  CHECK(results[0].c == 10);
  CHECK(results[0].avg_at_1 == 1.0);
  CHECK(results[0].pass_at_k.at(1) == 1.0);
  CHECK(results[0].pass_at_k.at(10) == 1.0);
}

TEST_CASE("evaluate: zero-init policy scores zero on a hard problem") {
  corpus::GenerationConfig cfg;
  cfg.easy_count = 0;
  cfg.medium_count = 0;
  cfg.hard_count = 1;
  corpus::Corpus c = corpus::generate_corpus(cfg, 19);
  REQUIRE(c.problems.size() == 1);
  CHECK(c.problems[0].solution_density < 1e-4);

  policy::PolicyDims dims;
  policy::PolicyParams params = policy::PolicyParams::zero_init(dims);
  auto results = evaluate(params, {&c.problems[0]}, 10, {1}, 1.0, dims.t_max,
                          RngKey::root(2, purpose::kEval), 4);
  CHECK(results[0].c == 0);
  CHECK(results[0].pass_at_k.at(1) == 0.0);
}

TEST_CASE("evaluate is deterministic and worker-invariant") {
  corpus::GenerationConfig cfg;
  cfg.easy_count = 3;
  cfg.medium_count = 2;
  cfg.hard_count = 0;
  corpus::Corpus c = corpus::generate_corpus(cfg, 23);
  std::vector<const corpus::Problem*> ps;
  for (const auto& p : c.problems) ps.push_back(&p);

  policy::PolicyDims dims;
  policy::PolicyParams params = policy::PolicyParams::zero_init(dims);
  auto a = evaluate(params, ps, 16, {1, 8}, 1.0, dims.t_max,
                    RngKey::root(3, purpose::kEval), 1);
  auto b = evaluate(params, ps, 16, {1, 8}, 1.0, dims.t_max,
                    RngKey::root(3, purpose::kEval), 8);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].c == b[i].c);
    CHECK(a[i].avg_at_1 == b[i].avg_at_1);
  }
  CHECK_THROWS_AS(evaluate(params, ps, 4, {8}, 1.0, dims.t_max,
                           RngKey::root(3, purpose::kEval)),
                  DomainError);
}
