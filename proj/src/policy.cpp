#include "rlvr/policy.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace rlvr::policy {

using lang::kBosId;
using lang::kEos;

ParamVector ParamVector::zeros(const PolicyDims& dims) {
  ParamVector v;
  v.ctx.assign(dims.ctx_size(), 0.0);
  v.feat.assign(dims.feat_size(), 0.0);
  v.bias.assign(dims.bias_size(), 0.0);
  return v;
}

void ParamVector::fill(double value) {
  std::fill(ctx.begin(), ctx.end(), value);
  std::fill(feat.begin(), feat.end(), value);
  std::fill(bias.begin(), bias.end(), value);
}

void ParamVector::axpy(double alpha, const ParamVector& other) {
  assert(ctx.size() == other.ctx.size());
  for (std::size_t i = 0; i < ctx.size(); ++i) ctx[i] += alpha * other.ctx[i];
  for (std::size_t i = 0; i < feat.size(); ++i) feat[i] += alpha * other.feat[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += alpha * other.bias[i];
}

void ParamVector::scale(double alpha) {
  for (double& x : ctx) x *= alpha;
  for (double& x : feat) x *= alpha;
  for (double& x : bias) x *= alpha;
}

double ParamVector::dot(const ParamVector& other) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < ctx.size(); ++i) acc += ctx[i] * other.ctx[i];
  for (std::size_t i = 0; i < feat.size(); ++i) acc += feat[i] * other.feat[i];
  for (std::size_t i = 0; i < bias.size(); ++i) acc += bias[i] * other.bias[i];
  return acc;
}

double ParamVector::max_abs() const {
  double m = 0.0;
  for (double x : ctx) m = std::max(m, std::abs(x));
  for (double x : feat) m = std::max(m, std::abs(x));
  for (double x : bias) m = std::max(m, std::abs(x));
  return m;
}

PolicyParams PolicyParams::zero_init(const PolicyDims& dims) {
  return PolicyParams{dims, ParamVector::zeros(dims), 0};
}

ProblemFeatures problem_features(const corpus::Problem& problem,
                                 int feature_dim) {
  ProblemFeatures f;
  f.values.assign(static_cast<std::size_t>(feature_dim), 0.0);
  f.values[0] = 1.0;
  const int buckets = feature_dim - 1;

  auto bump = [&](std::uint64_t salt, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = detail::mix(detail::mix(salt, a), b);
    f.values[1 + static_cast<std::size_t>(h % buckets)] += 1.0;
  };

  bump(0x6363, problem.public_cases.size(), 0);
  for (std::size_t c = 0; c < problem.public_cases.size(); ++c) {
    const corpus::TestCase& tc = problem.public_cases[c];
    for (std::size_t i = 0; i < tc.inputs.size(); ++i) {
      bump(0x696e, i, static_cast<std::uint64_t>(tc.inputs[i]));
    }
    for (std::size_t i = 0; i < tc.expected_outputs.size(); ++i) {
      bump(0x6f75, i, static_cast<std::uint64_t>(tc.expected_outputs[i]));
    }
  }

  double norm = 0.0;
  for (std::size_t i = 1; i < f.values.size(); ++i) {
    norm += f.values[i] * f.values[i];
  }
  if (norm > 0.0) {
    double inv = 1.0 / std::sqrt(norm);
    for (std::size_t i = 1; i < f.values.size(); ++i) f.values[i] *= inv;
  }
  return f;
}

void logits(const PolicyParams& params, const ProblemFeatures& features,
            std::span<const int> context, std::span<double> out) {
  const PolicyDims& d = params.dims;
  assert(static_cast<int>(context.size()) == d.ctx_window);
  assert(static_cast<int>(out.size()) == d.vocab);
  assert(static_cast<int>(features.values.size()) == d.feature_dim);

  std::copy(params.weights.bias.begin(), params.weights.bias.end(),
            out.begin());
  const std::size_t slot_stride =
      static_cast<std::size_t>(d.vocab + 1) * d.vocab;
  for (int w = 0; w < d.ctx_window; ++w) {
    int id = context[static_cast<std::size_t>(w)];
    assert(id >= 0 && id <= d.vocab);
    const double* row = params.weights.ctx.data() + w * slot_stride +
                        static_cast<std::size_t>(id) * d.vocab;
    for (int v = 0; v < d.vocab; ++v) out[static_cast<std::size_t>(v)] += row[v];
  }
  for (int k = 0; k < d.feature_dim; ++k) {
    double x = features.values[static_cast<std::size_t>(k)];
    if (x == 0.0) continue;
    const double* row =
        params.weights.feat.data() + static_cast<std::size_t>(k) * d.vocab;
    for (int v = 0; v < d.vocab; ++v) out[static_cast<std::size_t>(v)] += x * row[v];
  }
}

double softmax_inplace(std::span<double> z) {
  double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& x : z) {
    x = std::exp(x - zmax);
    sum += x;
  }
  double entropy = 0.0;
  for (double& x : z) {
    x /= sum;
    if (x > 0.0) entropy -= x * std::log(x);
  }
  return entropy;
}

void context_window(std::span<const int> tokens, int t, int window,
                    std::vector<int>& out) {
  out.resize(static_cast<std::size_t>(window));
  for (int w = 0; w < window; ++w) {
    int src = t - window + w;
    out[static_cast<std::size_t>(w)] =
        src >= 0 ? tokens[static_cast<std::size_t>(src)] : kBosId;
  }
}

namespace {

void context_at(std::span<const int> tokens, int t, int window,
                std::vector<int>& ctx) {
  context_window(tokens, t, window, ctx);
}

}  // namespace

SampledSequence sample(const PolicyParams& params,
                       const ProblemFeatures& features, double temperature,
                       int t_max, RngStream& rng) {
  assert(temperature > 0.0);
  const PolicyDims& d = params.dims;
  SampledSequence seq;
  std::vector<int> ctx;
  std::vector<double> z(static_cast<std::size_t>(d.vocab));
  std::vector<double> z1(static_cast<std::size_t>(d.vocab));

  for (int t = 0; t < t_max; ++t) {
    context_at(seq.program.tokens, t, d.ctx_window, ctx);
    logits(params, features, ctx, z);
    z1 = z;
    softmax_inplace(z1);  // temperature-1 probabilities for the logprob record
    if (temperature != 1.0) {
      for (double& x : z) x /= temperature;
    }
    double entropy = softmax_inplace(z);
    std::size_t tok = rng.next_categorical(z);
    seq.program.tokens.push_back(static_cast<int>(tok));
    seq.logprobs.push_back(std::log(z1[tok]));
    seq.step_entropies.push_back(entropy);
    if (static_cast<int>(tok) == kEos) {
      seq.program.truncated = false;
      return seq;
    }
  }
  seq.program.truncated = true;
  return seq;
}

lang::Program greedy_decode(const PolicyParams& params,
                            const ProblemFeatures& features, int t_max) {
  const PolicyDims& d = params.dims;
  lang::Program p;
  std::vector<int> ctx;
  std::vector<double> z(static_cast<std::size_t>(d.vocab));
  for (int t = 0; t < t_max; ++t) {
    context_at(p.tokens, t, d.ctx_window, ctx);
    logits(params, features, ctx, z);
    int tok = static_cast<int>(
        std::max_element(z.begin(), z.end()) - z.begin());
    p.tokens.push_back(tok);
    if (tok == kEos) {
      p.truncated = false;
      return p;
    }
  }
  p.truncated = true;
  return p;
}

double sequence_logprob(const PolicyParams& params,
                        const ProblemFeatures& features,
                        const lang::Program& program) {
  const PolicyDims& d = params.dims;
  std::vector<int> ctx;
  std::vector<double> z(static_cast<std::size_t>(d.vocab));
  double total = 0.0;
  for (std::size_t t = 0; t < program.tokens.size(); ++t) {
    context_at(program.tokens, static_cast<int>(t), d.ctx_window, ctx);
    logits(params, features, ctx, z);
    softmax_inplace(z);
    total += std::log(z[static_cast<std::size_t>(program.tokens[t])]);
  }
  return total;
}

void accumulate_grad_sequence_logprob(const PolicyParams& params,
                                      const ProblemFeatures& features,
                                      const lang::Program& program,
                                      double coeff, ParamVector& grad) {
  const PolicyDims& d = params.dims;
  std::vector<int> ctx;
  std::vector<double> p(static_cast<std::size_t>(d.vocab));
  const std::size_t slot_stride =
      static_cast<std::size_t>(d.vocab + 1) * d.vocab;

  for (std::size_t t = 0; t < program.tokens.size(); ++t) {
    context_at(program.tokens, static_cast<int>(t), d.ctx_window, ctx);
    logits(params, features, ctx, p);
    softmax_inplace(p);
    // d logp(tok) / d z = onehot(tok) - p; chain through each input block.
    int tok = program.tokens[t];
    for (int v = 0; v < d.vocab; ++v) {
      double g = coeff * ((v == tok ? 1.0 : 0.0) - p[static_cast<std::size_t>(v)]);
      grad.bias[static_cast<std::size_t>(v)] += g;
      for (int w = 0; w < d.ctx_window; ++w) {
        grad.ctx[w * slot_stride +
                 static_cast<std::size_t>(ctx[static_cast<std::size_t>(w)]) * d.vocab +
                 static_cast<std::size_t>(v)] += g;
      }
      for (int k = 0; k < d.feature_dim; ++k) {
        double x = features.values[static_cast<std::size_t>(k)];
        if (x == 0.0) continue;
        grad.feat[static_cast<std::size_t>(k) * d.vocab + static_cast<std::size_t>(v)] += g * x;
      }
    }
  }
}

ParamVector grad_sequence_logprob(const PolicyParams& params,
                                  const ProblemFeatures& features,
                                  const lang::Program& program) {
  ParamVector grad = ParamVector::zeros(params.dims);
  accumulate_grad_sequence_logprob(params, features, program, 1.0, grad);
  return grad;
}

void accumulate_step_gradient(const PolicyDims& dims,
                              const ProblemFeatures& features,
                              std::span<const int> context,
                              std::span<const double> dloss_dlogits,
                              ParamVector& grad) {
  const std::size_t slot_stride =
      static_cast<std::size_t>(dims.vocab + 1) * dims.vocab;
  for (int v = 0; v < dims.vocab; ++v) {
    double g = dloss_dlogits[static_cast<std::size_t>(v)];
    if (g == 0.0) continue;
    grad.bias[static_cast<std::size_t>(v)] += g;
    for (int w = 0; w < dims.ctx_window; ++w) {
      grad.ctx[w * slot_stride +
               static_cast<std::size_t>(context[static_cast<std::size_t>(w)]) * dims.vocab +
               static_cast<std::size_t>(v)] += g;
    }
    for (int k = 0; k < dims.feature_dim; ++k) {
      double x = features.values[static_cast<std::size_t>(k)];
      if (x == 0.0) continue;
      grad.feat[static_cast<std::size_t>(k) * dims.vocab + static_cast<std::size_t>(v)] += g * x;
    }
  }
}

double mean_policy_entropy(const PolicyParams& params,
                           const std::vector<const corpus::Problem*>& problems,
                           double temperature, int rollouts_per_problem,
                           int t_max, RngKey key) {
  assert(!problems.empty());
  double total = 0.0;
  std::size_t steps = 0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    ProblemFeatures f = problem_features(*problems[i], params.dims.feature_dim);
    for (int r = 0; r < rollouts_per_problem; ++r) {
      RngStream rng = key.child(i).child(static_cast<std::uint64_t>(r)).stream();
      SampledSequence seq = sample(params, f, temperature, t_max, rng);
      for (double h : seq.step_entropies) total += h;
      steps += seq.step_entropies.size();
    }
  }
  return steps == 0 ? 0.0 : total / static_cast<double>(steps);
}

}  // namespace rlvr::policy
