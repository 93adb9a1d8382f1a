#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rlvr/corpus.hpp"
#include "rlvr/lang.hpp"
#include "rlvr/rng.hpp"

namespace rlvr::policy {

struct PolicyDims {
  int vocab = lang::kVocabSize;
  int ctx_window = 4;
  int feature_dim = 64;
  int t_max = 24;

  bool operator==(const PolicyDims&) const = default;

  // Context rows include the reserved BOS id, so (vocab + 1) per slot.
  std::size_t ctx_size() const {
    return static_cast<std::size_t>(ctx_window) * (vocab + 1) * vocab;
  }
  std::size_t feat_size() const {
    return static_cast<std::size_t>(feature_dim) * vocab;
  }
  std::size_t bias_size() const { return static_cast<std::size_t>(vocab); }
  std::size_t total_size() const {
    return ctx_size() + feat_size() + bias_size();
  }
};

// Flat parameter/gradient/moment container; one shape serves all three.
struct ParamVector {
  std::vector<double> ctx;   // [ctx_window][vocab+1][vocab], row-major
  std::vector<double> feat;  // [feature_dim][vocab], row-major
  std::vector<double> bias;  // [vocab]

  static ParamVector zeros(const PolicyDims& dims);

  void fill(double value);
  void axpy(double alpha, const ParamVector& other);  // this += alpha * other
  void scale(double alpha);
  double dot(const ParamVector& other) const;
  double max_abs() const;

  bool operator==(const ParamVector&) const = default;
};

struct PolicyParams {
  PolicyDims dims;
  ParamVector weights;
  std::uint64_t version = 0;

  static PolicyParams zero_init(const PolicyDims& dims);

  // Bumps the version; call after every in-place weight update.
  void mark_updated() { ++version; }
};

struct ProblemFeatures {
  std::vector<double> values;  // length feature_dim, values[0] == 1
};

// Deterministic hashed-bucket features of a problem's public cases.
// Tail (everything past the constant slot) is L2-normalized, so the
// feature norm is bounded by sqrt(2).
ProblemFeatures problem_features(const corpus::Problem& problem,
                                 int feature_dim);

struct SampledSequence {
  lang::Program program;
  std::vector<double> logprobs;        // per emitted token, temperature 1
  std::vector<double> step_entropies;  // of the sampling distribution
};

// Writes the V logits for the next token. context holds the last ctx_window
// token ids, BOS-padded at the front when fewer exist.
void logits(const PolicyParams& params, const ProblemFeatures& features,
            std::span<const int> context, std::span<double> out);

// In-place softmax with max subtraction; returns the entropy of the result.
double softmax_inplace(std::span<double> logits_to_probs);

// Autoregressive sampling at the given temperature until EOS or t_max.
// Recorded logprobs are at temperature 1 regardless of the sampling
// temperature; step entropies describe the tempered sampling distribution.
SampledSequence sample(const PolicyParams& params,
                       const ProblemFeatures& features, double temperature,
                       int t_max, RngStream& rng);

// Greedy decode (argmax at each step, lowest token id wins ties).
lang::Program greedy_decode(const PolicyParams& params,
                            const ProblemFeatures& features, int t_max);

double sequence_logprob(const PolicyParams& params,
                        const ProblemFeatures& features,
                        const lang::Program& program);

// grad += coeff * d(sequence_logprob)/d(params). Exact softmax gradient.
void accumulate_grad_sequence_logprob(const PolicyParams& params,
                                      const ProblemFeatures& features,
                                      const lang::Program& program,
                                      double coeff, ParamVector& grad);

ParamVector grad_sequence_logprob(const PolicyParams& params,
                                  const ProblemFeatures& features,
                                  const lang::Program& program);

// grad += d(loss)/d(params) for one step, given d(loss)/d(logits) at that
// step's (context, features) input.
void accumulate_step_gradient(const PolicyDims& dims,
                              const ProblemFeatures& features,
                              std::span<const int> context,
                              std::span<const double> dloss_dlogits,
                              ParamVector& grad);

// BOS-padded window of the last ctx_window token ids before position t.
void context_window(std::span<const int> tokens, int t, int window,
                    std::vector<int>& out);

// Mean of exact per-step entropies over sampled rollouts.
double mean_policy_entropy(const PolicyParams& params,
                           const std::vector<const corpus::Problem*>& problems,
                           double temperature, int rollouts_per_problem,
                           int t_max, RngKey key);

}  // namespace rlvr::policy
