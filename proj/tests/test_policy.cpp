#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rlvr/corpus.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rng.hpp"

using namespace rlvr;
using namespace rlvr::policy;

namespace {

PolicyDims small_dims() {
  PolicyDims d;
  d.feature_dim = 8;
  d.t_max = 8;
  return d;
}

void randomize(ParamVector& w, RngStream& rng, double scale) {
  for (auto* block : {&w.ctx, &w.feat, &w.bias}) {
    for (double& x : *block) x = scale * (2.0 * rng.next_unit() - 1.0);
  }
}

ProblemFeatures random_features(int dim, RngStream& rng) {
  ProblemFeatures f;
  f.values.assign(static_cast<std::size_t>(dim), 0.0);
  f.values[0] = 1.0;
  double norm2 = 0.0;
  for (std::size_t i = 1; i < f.values.size(); ++i) {
    f.values[i] = 2.0 * rng.next_unit() - 1.0;
    norm2 += f.values[i] * f.values[i];
  }
  if (norm2 > 0) {
    for (std::size_t i = 1; i < f.values.size(); ++i) {
      f.values[i] /= std::sqrt(norm2);
    }
  }
  return f;
}

corpus::Problem sample_problem() {
  corpus::Problem p;
  p.id = "p";
  p.public_cases = {{{2, 3}, {5}}, {{1, 1}, {2}}, {{-4, 2}, {-2}}};
  p.hidden_cases = {{{0, 0}, {0}}, {{5, 5}, {10}}, {{7, -7}, {0}}};
  return p;
}

}  // namespace

TEST_CASE("problem features: constant slot and bounded norm") {
  corpus::Problem p = sample_problem();
  auto f = problem_features(p, 64);
  REQUIRE(f.values.size() == 64);
  CHECK(f.values[0] == 1.0);
  double norm2 = 0.0;
  for (double v : f.values) norm2 += v * v;
  CHECK(norm2 <= 2.0 + 1e-12);

  // Deterministic, and sensitive to the cases.
  auto g = problem_features(p, 64);
  CHECK(f.values == g.values);
  corpus::Problem q = p;
  q.public_cases[0].expected_outputs[0] = 99;
  auto h = problem_features(q, 64);
  CHECK(f.values != h.values);
}

TEST_CASE("softmax normalizes and matches uniform entropy") {
  std::vector<double> logits_buf(22, 0.0);
  double entropy = softmax_inplace(logits_buf);
  double sum = std::accumulate(logits_buf.begin(), logits_buf.end(), 0.0);
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(std::abs(entropy - std::log(22.0)) <= 1e-12);

  // Large logits do not overflow (max subtraction).
  RngStream rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> l(22);
    for (double& x : l) x = 800.0 * (2.0 * rng.next_unit() - 1.0);
    double e = softmax_inplace(l);
    CHECK(std::isfinite(e));
    CHECK(e >= -1e-12);
    CHECK(std::abs(std::accumulate(l.begin(), l.end(), 0.0) - 1.0) <= 1e-12);
  }
}

TEST_CASE("context window BOS-pads the front") {
  std::vector<int> tokens{3, 10, 19};
  std::vector<int> ctx;
  context_window(tokens, 0, 4, ctx);
  CHECK(ctx == std::vector<int>{lang::kBosId, lang::kBosId, lang::kBosId,
                                lang::kBosId});
  context_window(tokens, 2, 4, ctx);
  CHECK(ctx == std::vector<int>{lang::kBosId, lang::kBosId, 3, 10});
  context_window(tokens, 3, 4, ctx);
  CHECK(ctx == std::vector<int>{lang::kBosId, 3, 10, 19});
}

TEST_CASE("sequence_logprob equals the sum of sampled step logprobs") {
  PolicyDims dims = small_dims();
  PolicyParams params = PolicyParams::zero_init(dims);
  RngStream rng(17);
  randomize(params.weights, rng, 0.3);
  auto features = random_features(dims.feature_dim, rng);

  for (int trial = 0; trial < 50; ++trial) {
    auto seq = sample(params, features, 1.0, dims.t_max, rng);
    double sum = std::accumulate(seq.logprobs.begin(), seq.logprobs.end(), 0.0);
    CHECK(std::abs(sum - sequence_logprob(params, features, seq.program)) <=
          1e-10);
    CHECK(seq.logprobs.size() == seq.program.tokens.size());
    CHECK(seq.step_entropies.size() == seq.program.tokens.size());
    if (!seq.program.truncated) {
      CHECK(seq.program.tokens.back() == lang::kEos);
    } else {
      CHECK(seq.program.tokens.size() ==
            static_cast<std::size_t>(dims.t_max));
    }
  }
}

TEST_CASE("gradient of sequence logprob matches finite differences") {
  PolicyDims dims = small_dims();
  PolicyParams params = PolicyParams::zero_init(dims);
  RngStream rng(23);
  randomize(params.weights, rng, 0.2);
  auto features = random_features(dims.feature_dim, rng);
  auto seq = sample(params, features, 1.0, dims.t_max, rng);
  ParamVector grad = grad_sequence_logprob(params, features, seq.program);

  const double h = 1e-6;
  auto check_block = [&](std::vector<double>& w, const std::vector<double>& g) {
    for (int probe = 0; probe < 25; ++probe) {
      std::size_t i = rng.next_below(w.size());
      double saved = w[i];
      w[i] = saved + h;
      double up = sequence_logprob(params, features, seq.program);
      w[i] = saved - h;
      double down = sequence_logprob(params, features, seq.program);
      w[i] = saved;
      double fd = (up - down) / (2 * h);
      CHECK(std::abs(fd - g[i]) <= 1e-5 * std::max(1.0, std::abs(g[i])));
    }
  };
  check_block(params.weights.ctx, grad.ctx);
  check_block(params.weights.feat, grad.feat);
  check_block(params.weights.bias, grad.bias);
}

TEST_CASE("first-token sampling frequencies match softmax probabilities") {
  PolicyDims dims = small_dims();
  dims.t_max = 1;
  PolicyParams params = PolicyParams::zero_init(dims);
  RngStream rng(31);
  randomize(params.weights, rng, 0.5);
  auto features = random_features(dims.feature_dim, rng);

  std::vector<int> ctx(static_cast<std::size_t>(dims.ctx_window), lang::kBosId);
  std::vector<double> probs(static_cast<std::size_t>(dims.vocab));
  logits(params, features, ctx, probs);
  softmax_inplace(probs);

  const int n = 100000;
  std::vector<int> counts(static_cast<std::size_t>(dims.vocab), 0);
  for (int i = 0; i < n; ++i) {
    auto seq = sample(params, features, 1.0, dims.t_max, rng);
    ++counts[static_cast<std::size_t>(seq.program.tokens[0])];
  }
  for (int v = 0; v < dims.vocab; ++v) {
    double p = probs[static_cast<std::size_t>(v)];
    double freq = static_cast<double>(counts[static_cast<std::size_t>(v)]) / n;
    double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(freq - p) <= 3.0 * se + 1e-4);
  }
}

TEST_CASE("temperature reshapes sampling but not recorded logprobs") {
  PolicyDims dims = small_dims();
  PolicyParams params = PolicyParams::zero_init(dims);
  RngStream rng(41);
  randomize(params.weights, rng, 1.0);
  auto features = random_features(dims.feature_dim, rng);

  auto seq = sample(params, features, 0.5, dims.t_max, rng);
  // Logprobs are temperature-1 regardless of the sampling temperature.
  double sum = std::accumulate(seq.logprobs.begin(), seq.logprobs.end(), 0.0);
  CHECK(std::abs(sum - sequence_logprob(params, features, seq.program)) <=
        1e-10);

  // Low temperature concentrates: greedy decode should dominate samples.
  lang::Program greedy = greedy_decode(params, features, dims.t_max);
  int hits = 0;
  for (int i = 0; i < 200; ++i) {
    auto s = sample(params, features, 0.05, dims.t_max, rng);
    if (s.program == greedy) ++hits;
  }
  CHECK(hits > 150);
}

TEST_CASE("greedy decode is deterministic and breaks ties by lowest id") {
  PolicyDims dims = small_dims();
  PolicyParams params = PolicyParams::zero_init(dims);
  RngStream rng(5);
  auto features = random_features(dims.feature_dim, rng);
  // Zero-init: every logit ties at 0, so greedy emits token 0 until t_max.
  lang::Program p = greedy_decode(params, features, dims.t_max);
  CHECK(p.truncated);
  for (int t : p.tokens) CHECK(t == 0);

  randomize(params.weights, rng, 0.7);
  CHECK(greedy_decode(params, features, dims.t_max) ==
        greedy_decode(params, features, dims.t_max));
}

TEST_CASE("version bumps on mark_updated") {
  PolicyParams params = PolicyParams::zero_init(small_dims());
  auto v0 = params.version;
  params.mark_updated();
  CHECK(params.version == v0 + 1);
}
