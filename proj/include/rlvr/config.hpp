#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rlvr/corpus.hpp"
#include "rlvr/curriculum.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/grpo.hpp"
#include "rlvr/warmstart.hpp"

namespace rlvr::config {

struct EvalConfig {
  int n_samples = 16;
  std::vector<int> ks = {1, 10};
  double temperature = 1.0;
  bool greedy = false;
  // Fraction of the corpus reserved as a held-out evaluation split.
  double holdout_fraction = 0.2;
};

// Everything a reproducible run needs, parseable from one INI-style file
// with sections [run], [corpus], [warmstart], [stage1], [stage2], [grpo],
// [eval]. Every field has the default shown here; unknown sections or keys
// are hard errors with line diagnostics.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int workers = 1;
  corpus::GenerationConfig corpus;
  warmstart::CurationPlan warmstart;
  curriculum::StageConfig stage1;
  curriculum::StageConfig stage2;
  grpo::GrpoConfig grpo;
  EvalConfig eval;

  RunConfig();
};

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin = "<string>");
RunConfig parse_config_file(const std::string& path);

// Every key in canonical order; parse_config_text(canonical_dump(c)) is
// semantically identical to c, and the dump is the hashing substrate.
std::string canonical_dump(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

// Deterministic (train, holdout) id split: seeded shuffle, then the first
// floor(fraction * n) ids become the holdout set.
std::pair<std::vector<std::string>, std::vector<std::string>> holdout_split(
    const corpus::Corpus& corpus, double fraction, std::uint64_t seed);

}  // namespace rlvr::config
