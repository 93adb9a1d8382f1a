#include "rlvr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "rlvr/errors.hpp"
#include "rlvr/rng.hpp"

namespace rlvr::corpus {

using lang::ExecStatus;
using lang::Program;

std::string_view difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
  }
  return "?";
}

Difficulty difficulty_from_name(std::string_view name) {
  if (name == "easy") return Difficulty::kEasy;
  if (name == "medium") return Difficulty::kMedium;
  if (name == "hard") return Difficulty::kHard;
  throw IoError("unknown difficulty label '" + std::string(name) + "'");
}

const Problem* Corpus::find(const std::string& id) const {
  for (const Problem& p : problems) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Oracle: exhaustive enumeration over EOS-terminated programs.
//
// The search walks the prefix tree of non-EOS tokens in token-id order
// (which enumerates programs lexicographically) and executes incrementally
// on every case. Branches are cut only when no completion can pass:
//  - any case hits an error status (errors are permanent),
//  - an OUT emits a value that mismatches some case's expected prefix,
//  - the remaining depth cannot fit the remaining OUTs plus EOS.
// ---------------------------------------------------------------------------

namespace {

struct Machine {
  std::vector<std::int64_t> stack;
  std::size_t next_input = 0;
};

// Undo record for one token applied to one machine.
struct Undo {
  std::int64_t a = 0;
  std::int64_t b = 0;
};

constexpr std::int64_t kMinI64 = std::numeric_limits<std::int64_t>::min();

// Applies tok to m; returns false if the case errors (caller prunes the
// branch and must not undo this particular machine).
bool apply(Machine& m, const TestCase& tc, int tok, Undo& undo) {
  using namespace lang;
  if (tok <= 9) {
    m.stack.push_back(tok);
    return true;
  }
  switch (tok) {
    case kAdd: case kSub: case kMul: case kDiv: case kMod: {
      if (m.stack.size() < 2) return false;
      std::int64_t rhs = m.stack.back();
      std::int64_t lhs = m.stack[m.stack.size() - 2];
      std::int64_t value = 0;
      switch (tok) {
        case kAdd: if (__builtin_add_overflow(lhs, rhs, &value)) return false; break;
        case kSub: if (__builtin_sub_overflow(lhs, rhs, &value)) return false; break;
        case kMul: if (__builtin_mul_overflow(lhs, rhs, &value)) return false; break;
        case kDiv:
          if (rhs == 0 || (lhs == kMinI64 && rhs == -1)) return false;
          value = lhs / rhs;
          break;
        case kMod:
          if (rhs == 0 || (lhs == kMinI64 && rhs == -1)) return false;
          value = lhs % rhs;
          break;
      }
      undo = {lhs, rhs};
      m.stack.pop_back();
      m.stack.back() = value;
      return true;
    }
    case kNeg:
      if (m.stack.empty() || m.stack.back() == kMinI64) return false;
      m.stack.back() = -m.stack.back();
      return true;
    case kDup:
      if (m.stack.empty()) return false;
      m.stack.push_back(m.stack.back());
      return true;
    case kSwap:
      if (m.stack.size() < 2) return false;
      std::swap(m.stack[m.stack.size() - 1], m.stack[m.stack.size() - 2]);
      return true;
    case kDrop:
      if (m.stack.empty()) return false;
      undo.a = m.stack.back();
      m.stack.pop_back();
      return true;
    case kIn:
      m.stack.push_back(m.next_input < tc.inputs.size() ? tc.inputs[m.next_input] : 0);
      ++m.next_input;
      return true;
    case kOut: {
      // Caller checks emptiness and value match before committing.
      undo.a = m.stack.back();
      m.stack.pop_back();
      return true;
    }
  }
  return false;
}

void unapply(Machine& m, int tok, const Undo& undo) {
  using namespace lang;
  if (tok <= 9) {
    m.stack.pop_back();
    return;
  }
  switch (tok) {
    case kAdd: case kSub: case kMul: case kDiv: case kMod:
      m.stack.back() = undo.a;
      m.stack.push_back(undo.b);
      return;
    case kNeg:
      m.stack.back() = -m.stack.back();
      return;
    case kDup:
      m.stack.pop_back();
      return;
    case kSwap:
      std::swap(m.stack[m.stack.size() - 1], m.stack[m.stack.size() - 2]);
      return;
    case kDrop:
      m.stack.push_back(undo.a);
      return;
    case kIn:
      m.stack.pop_back();
      --m.next_input;
      return;
    case kOut:
      m.stack.push_back(undo.a);
      return;
  }
}

struct Search {
  const std::vector<TestCase>& cases;
  int max_len;
  std::size_t expected_count;
  std::vector<Machine> machines;
  std::vector<int> prefix;
  std::size_t emitted = 0;

  std::uint64_t passing = 0;
  std::optional<int> best_len;
  std::vector<int> best_tokens;

  void dfs() {
    int depth = static_cast<int>(prefix.size());
    // EOS completes the program; counts iff every expected output was
    // emitted (stack leftovers are irrelevant, EOS halts Ok).
    if (emitted == expected_count) {
      ++passing;
      int len = depth + 1;
      if (!best_len || len < *best_len) {
        best_len = len;
        best_tokens = prefix;
        best_tokens.push_back(lang::kEos);
      }
      // Prefix-tree order is lexicographic, so the first program seen at a
      // given length is already the lex-min one; never overwrite on ties.
    }
    // Any extension uses depth+1 tokens and still needs a final EOS.
    if (depth + 2 > max_len) return;

    std::vector<Undo> undos(machines.size());
    for (int tok = 0; tok < lang::kEos; ++tok) {
      bool is_out = tok == lang::kOut;
      if (is_out) {
        if (emitted >= expected_count) continue;
        if (machines[0].stack.empty()) continue;
        bool match = true;
        for (std::size_t c = 0; c < machines.size(); ++c) {
          if (machines[c].stack.back() != cases[c].expected_outputs[emitted]) {
            match = false;
            break;
          }
        }
        if (!match) continue;
      }
      // Budget: after this token we need (remaining outputs) + EOS.
      std::size_t rem_after = emitted + (is_out ? 1 : 0);
      std::size_t needed_after = expected_count - rem_after;
      if (depth + 1 + static_cast<int>(needed_after) + 1 > max_len) continue;

      std::size_t applied = 0;
      bool ok = true;
      for (std::size_t c = 0; c < machines.size(); ++c) {
        if (!apply(machines[c], cases[c], tok, undos[c])) {
          ok = false;
          break;
        }
        ++applied;
      }
      if (ok) {
        prefix.push_back(tok);
        if (is_out) ++emitted;
        dfs();
        if (is_out) --emitted;
        prefix.pop_back();
      }
      for (std::size_t c = applied; c-- > 0;) {
        unapply(machines[c], tok, undos[c]);
      }
    }
  }
};

std::uint64_t total_programs(int max_len) {
  // EOS-terminated programs of length <= max_len: sum_{L=1}^{max_len} 21^(L-1).
  std::uint64_t total = 0;
  std::uint64_t pow = 1;
  for (int len = 1; len <= max_len; ++len) {
    total += pow;
    pow *= lang::kVocabSize - 1;
  }
  return total;
}

}  // namespace

OracleResult oracle_solve(const std::vector<TestCase>& cases, int max_len,
                          std::uint64_t enumeration_ceiling) {
  if (max_len < 1 || max_len > 8) {
    throw BudgetExceeded("oracle max_len must be in [1, 8], got " +
                         std::to_string(max_len));
  }
  double space = std::pow(static_cast<double>(lang::kVocabSize), max_len);
  if (space > static_cast<double>(enumeration_ceiling)) {
    throw BudgetExceeded("enumeration space exceeds configured ceiling");
  }
  if (cases.empty()) {
    throw BudgetExceeded("oracle_solve requires at least one case");
  }

  OracleResult result;
  result.total_count = total_programs(max_len);

  // All cases must expect the same output count: OUT emits globally, so
  // mismatched counts make the case set unsatisfiable.
  std::size_t expected = cases[0].expected_outputs.size();
  bool uniform = std::all_of(cases.begin(), cases.end(), [&](const TestCase& t) {
    return t.expected_outputs.size() == expected;
  });
  if (uniform) {
    Search search{cases, max_len, expected, std::vector<Machine>(cases.size()),
                  {}, 0};
    search.dfs();
    result.passing_count = search.passing;
    if (search.best_len) {
      result.min_solution_len = search.best_len;
      result.solution = Program{search.best_tokens, false};
    }
  }
  result.solution_density =
      static_cast<double>(result.passing_count) /
      static_cast<double>(result.total_count);
  return result;
}

// ---------------------------------------------------------------------------
// Corpus generation.
// ---------------------------------------------------------------------------

namespace {

// Stack-safe random program body; EOS appended by the caller.
std::optional<std::vector<int>> sample_body(RngStream& rng, int body_len) {
  using namespace lang;
  std::vector<int> tokens;
  int depth = 0;
  int in_count = 0;
  int out_count = 0;
  for (int i = 0; i < body_len; ++i) {
    std::vector<std::pair<int, double>> options;
    options.emplace_back(kIn, in_count == 0 ? 4.0 : 1.5);
    options.emplace_back(kPush0 + static_cast<int>(rng.next_below(10)), 1.0);
    if (depth >= 1) {
      options.emplace_back(kNeg, 0.8);
      options.emplace_back(kDup, 1.5);
      // Bias OUT toward the tail so outputs depend on real computation.
      options.emplace_back(kOut, i + 2 >= body_len ? 6.0 : 0.6);
    }
    if (depth >= 2) {
      options.emplace_back(kAdd, 3.0);
      options.emplace_back(kSub, 2.0);
      options.emplace_back(kMul, 2.0);
      options.emplace_back(kDiv, 0.8);
      options.emplace_back(kMod, 0.8);
      options.emplace_back(kSwap, 0.8);
    }
    double total = 0.0;
    for (auto& [tok, w] : options) total += w;
    double u = rng.next_unit() * total;
    int chosen = options.back().first;
    for (auto& [tok, w] : options) {
      if (u < w) { chosen = tok; break; }
      u -= w;
    }
    tokens.push_back(chosen);
    if (chosen == kIn || chosen == kDup || (chosen >= kPush0 && chosen <= 9)) {
      ++depth;
      if (chosen == kIn) ++in_count;
    } else if (chosen == kOut || chosen == kDrop) {
      --depth;
      if (chosen == kOut) ++out_count;
    } else if (chosen >= kAdd && chosen <= kMod) {
      --depth;
    }
  }
  if (in_count == 0 || out_count == 0) return std::nullopt;
  return tokens;
}

std::vector<std::int64_t> sample_inputs(RngStream& rng, int count,
                                        const GenerationConfig& cfg) {
  std::vector<std::int64_t> v(static_cast<std::size_t>(count));
  for (auto& x : v) x = rng.next_range(cfg.input_min, cfg.input_max);
  return v;
}

Difficulty classify(int min_len, const GenerationConfig& cfg) {
  if (min_len <= cfg.easy_max_len) return Difficulty::kEasy;
  if (min_len <= cfg.medium_max_len) return Difficulty::kMedium;
  return Difficulty::kHard;
}

std::optional<Problem> try_candidate(Difficulty target,
                                     const GenerationConfig& cfg,
                                     RngStream& rng) {
  int body_len = 0;
  switch (target) {
    case Difficulty::kEasy:
      body_len = 2 + static_cast<int>(rng.next_below(2));  // program len 3-4
      break;
    case Difficulty::kMedium:
      body_len = 4 + static_cast<int>(rng.next_below(2));  // program len 5-6
      break;
    case Difficulty::kHard:
      body_len = cfg.oracle_len - 1;  // program len == oracle_len
      break;
  }
  auto body = sample_body(rng, body_len);
  if (!body) return std::nullopt;
  Program reference{*body, false};
  reference.tokens.push_back(lang::kEos);

  int n_inputs = static_cast<int>(
      std::count(body->begin(), body->end(), lang::kIn));
  int n_cases = cfg.public_case_count + cfg.hidden_case_count;

  std::set<std::vector<std::int64_t>> seen;
  std::vector<TestCase> cases;
  int attempts = 0;
  while (static_cast<int>(cases.size()) < n_cases && attempts < n_cases * 20) {
    ++attempts;
    auto inputs = sample_inputs(rng, n_inputs, cfg);
    if (!seen.insert(inputs).second) continue;
    auto outcome = lang::execute(reference, inputs);
    if (outcome.status != ExecStatus::kOk) continue;
    cases.push_back({std::move(inputs), std::move(outcome.outputs)});
  }
  if (static_cast<int>(cases.size()) < n_cases) return std::nullopt;

  // The output must depend on the input; constant references would have
  // pass rate ~1 under a random policy and destroy the difficulty spread.
  bool varies = false;
  for (std::size_t i = 1; i < cases.size() && !varies; ++i) {
    varies = cases[i].expected_outputs != cases[0].expected_outputs;
  }
  if (!varies) return std::nullopt;

  // Cheap pre-filter for hard targets: anything solvable within the medium
  // band cannot be hard, and the shallow search is much cheaper.
  if (target == Difficulty::kHard) {
    auto shallow = oracle_solve(cases, cfg.medium_max_len, cfg.enumeration_ceiling);
    if (shallow.min_solution_len) return std::nullopt;
  }

  auto oracle = oracle_solve(cases, cfg.oracle_len, cfg.enumeration_ceiling);
  if (!oracle.min_solution_len) return std::nullopt;
  if (classify(*oracle.min_solution_len, cfg) != target) return std::nullopt;

  Problem p;
  p.difficulty = target;
  p.min_solution_len = *oracle.min_solution_len;
  p.solution_density = oracle.solution_density;
  p.reference = *oracle.solution;
  p.public_cases.assign(cases.begin(),
                        cases.begin() + cfg.public_case_count);
  p.hidden_cases.assign(cases.begin() + cfg.public_case_count, cases.end());
  return p;
}

}  // namespace

Corpus generate_corpus(const GenerationConfig& config, std::uint64_t seed) {
  if (config.hidden_case_count < 3) {
    throw GenerationStalled("hidden_case_count must be >= 3");
  }
  Corpus corpus;
  corpus.seed = seed;
  corpus.config = config;

  struct Target { Difficulty d; int count; };
  const Target targets[] = {
      {Difficulty::kEasy, config.easy_count},
      {Difficulty::kMedium, config.medium_count},
      {Difficulty::kHard, config.hard_count},
  };

  for (const auto& [difficulty, count] : targets) {
    RngStream rng = RngKey::root(seed, purpose::kCorpus)
                        .child(static_cast<std::uint64_t>(difficulty))
                        .stream();
    int made = 0;
    int tries = 0;
    while (made < count) {
      if (++tries > config.retry_budget) {
        throw GenerationStalled(
            "rejection sampling stalled for difficulty '" +
            std::string(difficulty_name(difficulty)) + "'");
      }
      auto p = try_candidate(difficulty, config, rng);
      if (!p) continue;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s-%03d",
                    std::string(difficulty_name(difficulty)).c_str(), made);
      p->id = buf;
      corpus.problems.push_back(std::move(*p));
      ++made;
    }
  }

  // Interleave difficulties so sequential fold splits stay mixed.
  RngStream order_rng =
      RngKey::root(seed, purpose::kCorpus).child(0xfeed).stream();
  order_rng.shuffle(corpus.problems);
  return corpus;
}

std::vector<Problem> duplicate_hard(const std::vector<Problem>& problems) {
  std::vector<Problem> out;
  out.reserve(problems.size() * 2);
  for (const Problem& p : problems) {
    out.push_back(p);
    if (p.difficulty == Difficulty::kHard) {
      Problem replica = p;
      replica.replica = 1;
      out.push_back(std::move(replica));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: one JSON record per line, documented key order, header row
// carrying seed and config hash.
// ---------------------------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json config_to_json(const GenerationConfig& c) {
  return ordered_json{
      {"easy_count", c.easy_count},
      {"medium_count", c.medium_count},
      {"hard_count", c.hard_count},
      {"public_case_count", c.public_case_count},
      {"hidden_case_count", c.hidden_case_count},
      {"input_min", c.input_min},
      {"input_max", c.input_max},
      {"oracle_len", c.oracle_len},
      {"easy_max_len", c.easy_max_len},
      {"medium_max_len", c.medium_max_len},
      {"t_max", c.t_max},
      {"retry_budget", c.retry_budget},
      {"enumeration_ceiling", c.enumeration_ceiling},
  };
}

GenerationConfig config_from_json(const ordered_json& j) {
  GenerationConfig c;
  c.easy_count = j.at("easy_count");
  c.medium_count = j.at("medium_count");
  c.hard_count = j.at("hard_count");
  c.public_case_count = j.at("public_case_count");
  c.hidden_case_count = j.at("hidden_case_count");
  c.input_min = j.at("input_min");
  c.input_max = j.at("input_max");
  c.oracle_len = j.at("oracle_len");
  c.easy_max_len = j.at("easy_max_len");
  c.medium_max_len = j.at("medium_max_len");
  c.t_max = j.at("t_max");
  c.retry_budget = j.at("retry_budget");
  c.enumeration_ceiling = j.at("enumeration_ceiling");
  return c;
}

ordered_json cases_to_json(const std::vector<TestCase>& cases) {
  ordered_json arr = ordered_json::array();
  for (const TestCase& tc : cases) {
    arr.push_back(ordered_json{{"inputs", tc.inputs},
                               {"expected_outputs", tc.expected_outputs}});
  }
  return arr;
}

std::vector<TestCase> cases_from_json(const ordered_json& arr) {
  std::vector<TestCase> cases;
  for (const auto& j : arr) {
    TestCase tc;
    tc.inputs = j.at("inputs").get<std::vector<std::int64_t>>();
    tc.expected_outputs =
        j.at("expected_outputs").get<std::vector<std::int64_t>>();
    cases.push_back(std::move(tc));
  }
  return cases;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open corpus file for writing: " + path);

  ordered_json cfg = config_to_json(corpus.config);
  ordered_json header{
      {"schema", "corpus-v1"},
      {"seed", corpus.seed},
      {"config_hash", fnv1a(cfg.dump())},
      {"generation_config", cfg},
  };
  out << header.dump() << '\n';
  for (const Problem& p : corpus.problems) {
    ordered_json rec{
        {"id", p.id},
        {"difficulty", std::string(difficulty_name(p.difficulty))},
        {"public_cases", cases_to_json(p.public_cases)},
        {"hidden_cases", cases_to_json(p.hidden_cases)},
        {"min_solution_len", p.min_solution_len},
        {"solution_density", p.solution_density},
        {"reference_program", lang::render(p.reference)},
    };
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write failed for corpus file: " + path);
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty corpus file: " + path);

  ordered_json header = ordered_json::parse(line);
  if (header.at("schema") != "corpus-v1") {
    throw IoError("unsupported corpus schema in " + path);
  }
  Corpus corpus;
  corpus.seed = header.at("seed");
  corpus.config = config_from_json(header.at("generation_config"));

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json rec = ordered_json::parse(line);
    Problem p;
    p.id = rec.at("id");
    p.difficulty = difficulty_from_name(rec.at("difficulty").get<std::string>());
    p.public_cases = cases_from_json(rec.at("public_cases"));
    p.hidden_cases = cases_from_json(rec.at("hidden_cases"));
    p.min_solution_len = rec.at("min_solution_len");
    p.solution_density = rec.at("solution_density");
    p.reference =
        lang::parse_text(rec.at("reference_program").get<std::string>(),
                         corpus.config.t_max);
    corpus.problems.push_back(std::move(p));
  }
  return corpus;
}

}  // namespace rlvr::corpus
