#include "rlvr/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rlvr/rng.hpp"

namespace rlvr::config {

RunConfig::RunConfig() {
  stage1.stage = 1;
  stage1.group_size = 8;
  stage1.t_max = 16;
  stage1.steps = 32;
  stage1.batch_size = 8;
  stage2.stage = 2;
  stage2.group_size = 64;
  stage2.t_max = 24;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct KeyContext {
  const std::string& origin;
  int line = 0;
  std::string section;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(origin + ":" + std::to_string(line) + ": key '" +
                      section + "." + key + "': " + what);
  }
};

std::int64_t parse_i64(const std::string& v, const KeyContext& ctx) {
  try {
    std::size_t pos = 0;
    std::int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) ctx.fail("trailing characters in integer '" + v + "'");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    ctx.fail("expected integer, got '" + v + "'");
  }
}

int parse_int(const std::string& v, const KeyContext& ctx) {
  std::int64_t x = parse_i64(v, ctx);
  if (x < INT32_MIN || x > INT32_MAX) ctx.fail("integer out of range: " + v);
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& v, const KeyContext& ctx) {
  try {
    std::size_t pos = 0;
    std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) ctx.fail("trailing characters in integer '" + v + "'");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    ctx.fail("expected unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const KeyContext& ctx) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) ctx.fail("trailing characters in number '" + v + "'");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    ctx.fail("expected number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const KeyContext& ctx) {
  if (v == "true") return true;
  if (v == "false") return false;
  ctx.fail("expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& v, const KeyContext& ctx) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(parse_int(item, ctx));
  if (out.empty()) ctx.fail("expected a non-empty comma-separated list");
  return out;
}

// "15:64,10:32,5:32" -> {hardest_count, step_budget} pairs; "" -> default.
std::vector<curriculum::PhaseSpec> parse_phases(const std::string& v,
                                                const KeyContext& ctx) {
  std::vector<curriculum::PhaseSpec> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split_list(v)) {
    std::size_t colon = item.find(':');
    if (colon == std::string::npos) {
      ctx.fail("phase entries take the form COUNT:BUDGET, got '" + item + "'");
    }
    curriculum::PhaseSpec spec;
    spec.hardest_count = parse_int(trim(item.substr(0, colon)), ctx);
    spec.step_budget = parse_int(trim(item.substr(colon + 1)), ctx);
    out.push_back(spec);
  }
  return out;
}

std::string render_phases(const std::vector<curriculum::PhaseSpec>& phases) {
  std::string out;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(phases[i].hardest_count) + ':' +
           std::to_string(phases[i].step_budget);
  }
  return out;
}

std::string render_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += ids[i];
  }
  return out;
}

std::string render_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&,
                                  const KeyContext&)>;

void apply_stage_key(curriculum::StageConfig& s, const std::string& key,
                     const std::string& v, const KeyContext& ctx,
                     bool stage2) {
  if (key == "pool") {
    s.pool = split_list(v);
  } else if (key == "group_size") {
    s.group_size = parse_int(v, ctx);
  } else if (key == "t_max") {
    s.t_max = parse_int(v, ctx);
  } else if (key == "temperature") {
    s.temperature = parse_double(v, ctx);
  } else if (!stage2 && key == "steps") {
    s.steps = parse_int(v, ctx);
  } else if (!stage2 && key == "batch_size") {
    s.batch_size = parse_int(v, ctx);
  } else if (stage2 && key == "phases") {
    s.phases = parse_phases(v, ctx);
  } else if (stage2 && key == "fresh_probe_refresh") {
    s.fresh_probe_refresh = parse_bool(v, ctx);
  } else {
    ctx.fail("unknown key");
  }
}

void apply_key(RunConfig& c, const std::string& section,
               const std::string& key, const std::string& v,
               const KeyContext& ctx) {
  if (section == "run") {
    if (key == "seed") c.seed = parse_u64(v, ctx);
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "workers") c.workers = parse_int(v, ctx);
    else ctx.fail("unknown key");
  } else if (section == "corpus") {
    auto& g = c.corpus;
    if (key == "easy_count") g.easy_count = parse_int(v, ctx);
    else if (key == "medium_count") g.medium_count = parse_int(v, ctx);
    else if (key == "hard_count") g.hard_count = parse_int(v, ctx);
    else if (key == "public_case_count") g.public_case_count = parse_int(v, ctx);
    else if (key == "hidden_case_count") g.hidden_case_count = parse_int(v, ctx);
    else if (key == "input_min") g.input_min = parse_i64(v, ctx);
    else if (key == "input_max") g.input_max = parse_i64(v, ctx);
    else if (key == "oracle_len") g.oracle_len = parse_int(v, ctx);
    else if (key == "easy_max_len") g.easy_max_len = parse_int(v, ctx);
    else if (key == "medium_max_len") g.medium_max_len = parse_int(v, ctx);
    else if (key == "t_max") g.t_max = parse_int(v, ctx);
    else if (key == "retry_budget") g.retry_budget = parse_int(v, ctx);
    else if (key == "enumeration_ceiling") g.enumeration_ceiling = parse_u64(v, ctx);
    else ctx.fail("unknown key");
  } else if (section == "warmstart") {
    auto& w = c.warmstart;
    if (key == "strategy") {
      try {
        w.strategy = warmstart::strategy_from_name(v);
      } catch (const std::exception&) {
        ctx.fail("unknown strategy '" + v + "' (basic, arena, twice_hard)");
      }
    } else if (key == "folds") w.folds = parse_int(v, ctx);
    else if (key == "epochs") w.epochs = parse_int(v, ctx);
    else if (key == "learning_rate") w.learning_rate = parse_double(v, ctx);
    else if (key == "batch_size") w.batch_size = parse_int(v, ctx);
    else if (key == "probe_rollouts") w.probe_rollouts = parse_int(v, ctx);
    else if (key == "probe_epochs") w.probe_epochs = parse_int(v, ctx);
    else ctx.fail("unknown key");
  } else if (section == "stage1") {
    apply_stage_key(c.stage1, key, v, ctx, false);
  } else if (section == "stage2") {
    apply_stage_key(c.stage2, key, v, ctx, true);
  } else if (section == "grpo") {
    auto& g = c.grpo;
    if (key == "clip_epsilon") g.clip_epsilon = parse_double(v, ctx);
    else if (key == "kl_coefficient") g.kl_coefficient = parse_double(v, ctx);
    else if (key == "std_floor") g.std_floor = parse_double(v, ctx);
    else if (key == "learning_rate") g.optimizer.learning_rate = parse_double(v, ctx);
    else if (key == "updates_per_batch") g.updates_per_batch = parse_int(v, ctx);
    else if (key == "ratio_guard_log") g.ratio_guard_log = parse_double(v, ctx);
    else if (key == "aggregation") {
      if (v == "sequence_mean") g.aggregation = grpo::TokenAggregation::kSequenceMean;
      else if (v == "token_mean") g.aggregation = grpo::TokenAggregation::kTokenMean;
      else ctx.fail("unknown aggregation '" + v + "' (sequence_mean, token_mean)");
    } else if (key == "reward_mode") {
      if (v == "binary") g.reward_mode = judge::RewardMode::kBinary;
      else if (v == "fractional") g.reward_mode = judge::RewardMode::kFractional;
      else ctx.fail("unknown reward mode '" + v + "' (binary, fractional)");
    } else ctx.fail("unknown key");
  } else if (section == "eval") {
    auto& e = c.eval;
    if (key == "n_samples") e.n_samples = parse_int(v, ctx);
    else if (key == "ks") e.ks = parse_int_list(v, ctx);
    else if (key == "temperature") e.temperature = parse_double(v, ctx);
    else if (key == "greedy") e.greedy = parse_bool(v, ctx);
    else if (key == "holdout_fraction") e.holdout_fraction = parse_double(v, ctx);
    else ctx.fail("unknown key");
  } else {
    throw ConfigError(ctx.origin + ":" + std::to_string(ctx.line) +
                      ": unknown section [" + section + "]");
  }
}

void validate(const RunConfig& c, const std::string& origin) {
  auto fail = [&](const std::string& what) {
    throw ConfigError(origin + ": " + what);
  };
  if (c.workers < 1) fail("run.workers must be >= 1");
  if (c.corpus.input_min > c.corpus.input_max) {
    fail("corpus.input_min exceeds corpus.input_max");
  }
  if (c.corpus.easy_max_len >= c.corpus.medium_max_len) {
    fail("corpus.easy_max_len must be below corpus.medium_max_len");
  }
  if (c.corpus.medium_max_len >= c.corpus.oracle_len) {
    fail("corpus.medium_max_len must be below corpus.oracle_len");
  }
  if (c.warmstart.folds < 2) fail("warmstart.folds must be >= 2");
  for (const auto* s : {&c.stage1, &c.stage2}) {
    std::string name = "stage" + std::to_string(s->stage);
    if (s->group_size < 2) fail(name + ".group_size must be >= 2");
    if (s->t_max < 1) fail(name + ".t_max must be >= 1");
    if (s->temperature <= 0.0) fail(name + ".temperature must be positive");
  }
  if (c.stage1.steps < 0) fail("stage1.steps must be >= 0");
  if (c.stage1.batch_size < 1) fail("stage1.batch_size must be >= 1");
  if (c.grpo.clip_epsilon <= 0.0) fail("grpo.clip_epsilon must be positive");
  if (c.grpo.updates_per_batch < 1) fail("grpo.updates_per_batch must be >= 1");
  if (c.eval.n_samples < 1) fail("eval.n_samples must be >= 1");
  for (int k : c.eval.ks) {
    if (k < 1 || k > c.eval.n_samples) {
      fail("eval.ks entries must lie in [1, n_samples]");
    }
  }
  if (c.eval.holdout_fraction < 0.0 || c.eval.holdout_fraction >= 1.0) {
    fail("eval.holdout_fraction must lie in [0, 1)");
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  RunConfig c;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key = value, got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": key '" + key + "' appears before any section");
    }
    KeyContext ctx{origin, line_no, section, key};
    apply_key(c, section, key, value, ctx);
  }
  validate(c, origin);
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string canonical_dump(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n";
  out << "seed = " << c.seed << '\n';
  out << "output_dir = " << c.output_dir << '\n';
  out << "workers = " << c.workers << '\n';

  out << "\n[corpus]\n";
  out << "easy_count = " << c.corpus.easy_count << '\n';
  out << "medium_count = " << c.corpus.medium_count << '\n';
  out << "hard_count = " << c.corpus.hard_count << '\n';
  out << "public_case_count = " << c.corpus.public_case_count << '\n';
  out << "hidden_case_count = " << c.corpus.hidden_case_count << '\n';
  out << "input_min = " << c.corpus.input_min << '\n';
  out << "input_max = " << c.corpus.input_max << '\n';
  out << "oracle_len = " << c.corpus.oracle_len << '\n';
  out << "easy_max_len = " << c.corpus.easy_max_len << '\n';
  out << "medium_max_len = " << c.corpus.medium_max_len << '\n';
  out << "t_max = " << c.corpus.t_max << '\n';
  out << "retry_budget = " << c.corpus.retry_budget << '\n';
  out << "enumeration_ceiling = " << c.corpus.enumeration_ceiling << '\n';

  out << "\n[warmstart]\n";
  out << "strategy = " << warmstart::strategy_name(c.warmstart.strategy) << '\n';
  out << "folds = " << c.warmstart.folds << '\n';
  out << "epochs = " << c.warmstart.epochs << '\n';
  out << "learning_rate = " << render_double(c.warmstart.learning_rate) << '\n';
  out << "batch_size = " << c.warmstart.batch_size << '\n';
  out << "probe_rollouts = " << c.warmstart.probe_rollouts << '\n';
  out << "probe_epochs = " << c.warmstart.probe_epochs << '\n';

  out << "\n[stage1]\n";
  out << "pool = " << render_ids(c.stage1.pool) << '\n';
  out << "group_size = " << c.stage1.group_size << '\n';
  out << "t_max = " << c.stage1.t_max << '\n';
  out << "steps = " << c.stage1.steps << '\n';
  out << "batch_size = " << c.stage1.batch_size << '\n';
  out << "temperature = " << render_double(c.stage1.temperature) << '\n';

  out << "\n[stage2]\n";
  out << "pool = " << render_ids(c.stage2.pool) << '\n';
  out << "group_size = " << c.stage2.group_size << '\n';
  out << "t_max = " << c.stage2.t_max << '\n';
  out << "temperature = " << render_double(c.stage2.temperature) << '\n';
  out << "phases = " << render_phases(c.stage2.phases) << '\n';
  out << "fresh_probe_refresh = "
      << (c.stage2.fresh_probe_refresh ? "true" : "false") << '\n';

  out << "\n[grpo]\n";
  out << "clip_epsilon = " << render_double(c.grpo.clip_epsilon) << '\n';
  out << "kl_coefficient = " << render_double(c.grpo.kl_coefficient) << '\n';
  out << "std_floor = " << render_double(c.grpo.std_floor) << '\n';
  out << "learning_rate = " << render_double(c.grpo.optimizer.learning_rate)
      << '\n';
  out << "updates_per_batch = " << c.grpo.updates_per_batch << '\n';
  out << "aggregation = "
      << (c.grpo.aggregation == grpo::TokenAggregation::kSequenceMean
              ? "sequence_mean"
              : "token_mean")
      << '\n';
  out << "reward_mode = "
      << (c.grpo.reward_mode == judge::RewardMode::kBinary ? "binary"
                                                           : "fractional")
      << '\n';
  out << "ratio_guard_log = " << render_double(c.grpo.ratio_guard_log) << '\n';

  out << "\n[eval]\n";
  out << "n_samples = " << c.eval.n_samples << '\n';
  out << "ks = ";
  for (std::size_t i = 0; i < c.eval.ks.size(); ++i) {
    if (i) out << ',';
    out << c.eval.ks[i];
  }
  out << '\n';
  out << "temperature = " << render_double(c.eval.temperature) << '\n';
  out << "greedy = " << (c.eval.greedy ? "true" : "false") << '\n';
  out << "holdout_fraction = " << render_double(c.eval.holdout_fraction)
      << '\n';
  return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
  // output_dir and workers never influence results, so they do not
  // participate in the hash.
  RunConfig normalized = config;
  normalized.output_dir = RunConfig{}.output_dir;
  normalized.workers = 1;
  std::string dump = canonical_dump(normalized);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::pair<std::vector<std::string>, std::vector<std::string>> holdout_split(
    const corpus::Corpus& corpus, double fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& p : corpus.problems) ids.push_back(p.id);
  RngStream rng = RngKey::root(seed, purpose::kHoldout).stream();
  rng.shuffle(ids);
  auto holdout_n = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(ids.size())));
  std::vector<std::string> holdout(ids.begin(),
                                   ids.begin() + static_cast<long>(holdout_n));
  std::vector<std::string> train(ids.begin() + static_cast<long>(holdout_n),
                                 ids.end());
  return {train, holdout};
}

}  // namespace rlvr::config
