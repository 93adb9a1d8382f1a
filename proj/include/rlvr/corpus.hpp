#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlvr/lang.hpp"

namespace rlvr::corpus {

struct TestCase {
  std::vector<std::int64_t> inputs;
  std::vector<std::int64_t> expected_outputs;

  bool operator==(const TestCase&) const = default;
};

enum class Difficulty { kEasy, kMedium, kHard };

std::string_view difficulty_name(Difficulty d);
Difficulty difficulty_from_name(std::string_view name);

struct Problem {
  std::string id;
  Difficulty difficulty = Difficulty::kEasy;
  std::vector<TestCase> public_cases;
  std::vector<TestCase> hidden_cases;
  int min_solution_len = 0;
  double solution_density = 0.0;
  lang::Program reference;
  // 0 for the original instance; >0 marks duplicate_hard replicas.
  int replica = 0;
};

struct GenerationConfig {
  int easy_count = 10;
  int medium_count = 10;
  int hard_count = 10;
  int public_case_count = 3;
  int hidden_case_count = 8;
  std::int64_t input_min = -9;
  std::int64_t input_max = 9;
  // Oracle enumeration depth; also the difficulty-threshold ceiling.
  int oracle_len = 7;
  // min_solution_len <= easy_max_len -> easy; <= medium_max_len -> medium;
  // anything longer -> hard.
  int easy_max_len = 4;
  int medium_max_len = 6;
  int t_max = 24;
  int retry_budget = 20000;
  std::uint64_t enumeration_ceiling = 100'000'000'000ULL;

  bool operator==(const GenerationConfig&) const = default;
};

struct Corpus {
  std::vector<Problem> problems;
  std::uint64_t seed = 0;
  GenerationConfig config;

  const Problem* find(const std::string& id) const;
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationStalled : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleResult {
  // Empty when no program of length <= max_len passes all cases.
  std::optional<int> min_solution_len;
  std::optional<lang::Program> solution;  // lexicographically-first minimal
  std::uint64_t passing_count = 0;
  std::uint64_t total_count = 0;  // all EOS-terminated programs of len <= max_len
  double solution_density = 0.0;  // passing_count / total_count
};

// Exhaustively enumerates every EOS-terminated token sequence of length
// <= max_len and executes it on all cases. Exact counting; prunes only
// branches that provably cannot pass.
OracleResult oracle_solve(const std::vector<TestCase>& cases, int max_len,
                          std::uint64_t enumeration_ceiling = 100'000'000'000ULL);

// Deterministic under seed: same (config, seed) regenerates an identical
// corpus byte-for-byte.
Corpus generate_corpus(const GenerationConfig& config, std::uint64_t seed);

// Each hard-labeled problem appears exactly twice (replica marker set on the
// copy); easy/medium once; relative order stable.
std::vector<Problem> duplicate_hard(const std::vector<Problem>& problems);

void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

}  // namespace rlvr::corpus
