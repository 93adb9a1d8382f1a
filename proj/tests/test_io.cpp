#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "rlvr/checkpoint.hpp"
#include "rlvr/config.hpp"
#include "rlvr/report.hpp"

using namespace rlvr;

namespace {

policy::PolicyParams random_params(std::uint64_t seed) {
  policy::PolicyDims dims;
  dims.feature_dim = 8;
  policy::PolicyParams p = policy::PolicyParams::zero_init(dims);
  RngStream rng(seed);
  for (auto* block : {&p.weights.ctx, &p.weights.feat, &p.weights.bias}) {
    for (double& x : *block) x = 2.0 * rng.next_unit() - 1.0;
  }
  p.version = 17;
  return p;
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

std::vector<grpo::StepReport> sample_trace() {
  std::vector<grpo::StepReport> steps;
  RngStream rng(9);
  for (int i = 0; i < 5; ++i) {
    grpo::StepReport s;
    s.stage = i < 3 ? 1 : 2;
    s.phase = i < 3 ? 0 : 1;
    s.step = i;
    s.mean_reward = rng.next_unit();
    s.mean_entropy = 3.0 * rng.next_unit();
    s.truncation_rate = rng.next_unit();
    s.loss = 2.0 * rng.next_unit() - 1.0;
    s.kl = rng.next_unit() * 1e-3;
    s.pass_rates = {{"a", rng.next_unit()}, {"b", rng.next_unit()}};
    steps.push_back(s);
  }
  return steps;
}

}  // namespace

TEST_CASE("checkpoint round trip is exact") {
  policy::PolicyParams p = random_params(1);
  TempFile f("test_ckpt.bin");
  checkpoint::save(p, f.path);
  policy::PolicyParams q = checkpoint::load(f.path);
  CHECK(q.dims == p.dims);
  CHECK(q.version == p.version);
  CHECK(q.weights == p.weights);  // bitwise

  // Identical params produce identical files.
  TempFile f2("test_ckpt2.bin");
  checkpoint::save(p, f2.path);
  std::ifstream a(f.path, std::ios::binary), b(f2.path, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("checkpoint refuses corruption and version mismatch") {
  policy::PolicyParams p = random_params(2);
  TempFile f("test_ckpt_corrupt.bin");
  checkpoint::save(p, f.path);

  // Flip one payload byte -> checksum failure.
  {
    std::fstream io(f.path, std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(40);
    char c;
    io.seekg(40);
    io.get(c);
    io.seekp(40);
    io.put(static_cast<char>(c ^ 0x5a));
  }
  CHECK_THROWS_AS(checkpoint::load(f.path), IoError);

  // Unsupported format version (with a valid checksum) is refused too.
  checkpoint::save(p, f.path);
  CHECK_THROWS_AS(
      [&] {
        std::ifstream in(f.path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        bytes[0] = 99;
        // Recompute the trailing checksum so only the version is wrong.
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (std::size_t i = 0; i + 8 < bytes.size(); ++i) {
          h ^= static_cast<unsigned char>(bytes[i]);
          h *= 0x100000001b3ULL;
        }
        for (int i = 0; i < 8; ++i) {
          bytes[bytes.size() - 8 + static_cast<std::size_t>(i)] =
              static_cast<char>((h >> (8 * i)) & 0xff);
        }
        std::ofstream out(f.path, std::ios::binary);
        out << bytes;
        out.close();
        checkpoint::load(f.path);
      }(),
      IoError);

  CHECK_THROWS_AS(checkpoint::load("no_such_file.bin"), IoError);
}

TEST_CASE("manifest sidecar round trip") {
  checkpoint::Manifest m;
  m.stage = "stage2";
  m.step = 41;
  m.config_hash = 0xdeadbeefULL;
  m.metrics = {{"mean_reward", 0.75}, {"kl", 1e-4}};
  TempFile f("test_manifest.ckpt");
  TempFile sidecar(f.path + ".manifest.json");
  checkpoint::save_manifest(m, f.path);
  checkpoint::Manifest r = checkpoint::load_manifest(f.path);
  CHECK(r.stage == m.stage);
  CHECK(r.step == m.step);
  CHECK(r.config_hash == m.config_hash);
  CHECK(r.metrics == m.metrics);
}

TEST_CASE("trace CSV round trip is exact") {
  auto steps = sample_trace();
  TempFile f("test_trace.csv");
  report::write_trace_csv(steps, f.path);
  auto back = report::read_trace_csv(f.path);
  REQUIRE(back.size() == steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    CHECK(back[i].step == steps[i].step);
    CHECK(back[i].stage == steps[i].stage);
    CHECK(back[i].phase == steps[i].phase);
    CHECK(back[i].mean_reward == steps[i].mean_reward);  // %.17g exactness
    CHECK(back[i].mean_entropy == steps[i].mean_entropy);
    CHECK(back[i].truncation_rate == steps[i].truncation_rate);
    CHECK(back[i].loss == steps[i].loss);
    CHECK(back[i].kl == steps[i].kl);
  }

  // Empty trace still writes a valid schema + header file.
  TempFile g("test_trace_empty.csv");
  report::write_trace_csv({}, g.path);
  CHECK(report::read_trace_csv(g.path).empty());
}

TEST_CASE("trace CSV and JSON carry identical values") {
  auto steps = sample_trace();
  TempFile fc("test_trace2.csv");
  TempFile fj("test_trace2.json");
  report::write_trace_csv(steps, fc.path);
  report::write_trace_json(steps, fj.path);
  auto from_csv = report::read_trace_csv(fc.path);
  auto from_json = report::read_trace_json(fj.path);
  REQUIRE(from_csv.size() == from_json.size());
  for (std::size_t i = 0; i < from_csv.size(); ++i) {
    CHECK(from_csv[i].mean_reward == from_json[i].mean_reward);
    CHECK(from_csv[i].loss == from_json[i].loss);
    CHECK(from_csv[i].kl == from_json[i].kl);
  }
  // JSON additionally round-trips the pass-rate side data.
  for (std::size_t i = 0; i < steps.size(); ++i) {
    CHECK(from_json[i].pass_rates == steps[i].pass_rates);
  }
}

TEST_CASE("eval report round trip and aggregates") {
  std::vector<metrics::EvalResult> results(2);
  results[0].id = "a";
  results[0].n = 16;
  results[0].c = 4;
  results[0].avg_at_1 = 0.25;
  results[0].pass_at_k = {{1, 0.25}, {10, 0.95}};
  results[1].id = "b";
  results[1].n = 16;
  results[1].c = 0;
  results[1].avg_at_1 = 0.0;
  results[1].pass_at_k = {{1, 0.0}, {10, 0.0}};

  TempFile fj("test_eval.json");
  TempFile fc("test_eval.csv");
  report::write_eval_json(results, fj.path);
  report::write_eval_csv(results, fc.path);
  auto back = report::read_eval_json(fj.path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].pass_at_k == results[0].pass_at_k);
  CHECK(back[1].avg_at_1 == 0.0);

  std::ifstream in(fc.path);
  std::string schema, header;
  std::getline(in, schema);
  std::getline(in, header);
  CHECK(schema == "eval-csv-v1");
  CHECK(header == "problem_id,n,c,avg_at_1,pass_at_1,pass_at_10");
}

TEST_CASE("SVG chart is well-formed") {
  TempFile f("test_chart.svg");
  report::write_line_chart_svg(
      {{"a", {0.1, 0.5, 0.9}}, {"b", {0.9, 0.5, 0.2}}, {"empty", {}}},
      "title with <angle> & ampersand", "y", f.path);
  std::ifstream in(f.path);
  std::string body((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(body.rfind("<?xml", 0) == 0);
  CHECK(body.find("</svg>") != std::string::npos);
  CHECK(body.find("<polyline") != std::string::npos);
  // Raw angle brackets from the title must have been escaped.
  CHECK(body.find("<angle>") == std::string::npos);
  CHECK(body.find("&amp;") != std::string::npos);
}

TEST_CASE("default config round-trips through the canonical dump") {
  config::RunConfig def;
  std::string dump = config::canonical_dump(def);
  config::RunConfig back = config::parse_config_text(dump);
  CHECK(config::canonical_dump(back) == dump);
  CHECK(config::config_hash(back) == config::config_hash(def));
  CHECK(back.seed == def.seed);
  CHECK(back.corpus == def.corpus);
  CHECK(back.stage1.group_size == 8);
  CHECK(back.stage1.t_max == 16);
  CHECK(back.stage1.steps == 32);
  CHECK(back.stage2.group_size == 64);
  CHECK(back.stage2.t_max == 24);
  CHECK(back.grpo.clip_epsilon == 0.2);
  CHECK(back.grpo.kl_coefficient == 0.0);
  CHECK(back.grpo.std_floor == 1e-6);
  CHECK(back.grpo.optimizer.learning_rate == 0.05);
  CHECK(back.grpo.updates_per_batch == 1);
}

TEST_CASE("unknown config keys are hard errors naming the key") {
  CHECK_THROWS_AS(config::parse_config_text("[corpus]\ndifficultyy = 3\n"),
                  ConfigError);
  try {
    config::parse_config_text("[corpus]\ndifficultyy = 3\n");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("difficultyy") != std::string::npos);
    CHECK(msg.find(":2") != std::string::npos);  // line number
  }
  CHECK_THROWS_AS(config::parse_config_text("[nope]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config_text("x = 1\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config_text("[run]\nseed abc\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config_text("[run]\nworkers = zero\n"),
                  ConfigError);
}

TEST_CASE("config parses overrides and phase lists") {
  std::string text =
      "[run]\nseed = 42\nworkers = 8\n"
      "[stage2]\nphases = 15:64, 10:32, 5:32\nfresh_probe_refresh = true\n"
      "[grpo]\naggregation = token_mean\nreward_mode = fractional\n"
      "[eval]\nks = 1, 5, 10\ngreedy = true\n";
  config::RunConfig c = config::parse_config_text(text);
  CHECK(c.seed == 42);
  CHECK(c.workers == 8);
  REQUIRE(c.stage2.phases.size() == 3);
  CHECK(c.stage2.phases[0].hardest_count == 15);
  CHECK(c.stage2.phases[0].step_budget == 64);
  CHECK(c.stage2.phases[2].hardest_count == 5);
  CHECK(c.stage2.fresh_probe_refresh);
  CHECK(c.grpo.aggregation == grpo::TokenAggregation::kTokenMean);
  CHECK(c.grpo.reward_mode == judge::RewardMode::kFractional);
  CHECK(c.eval.ks == std::vector<int>{1, 5, 10});
  CHECK(c.eval.greedy);

  // Semantic validation still applies.
  CHECK_THROWS_AS(config::parse_config_text("[eval]\nks = 100\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config_text("[run]\nworkers = 0\n"),
                  ConfigError);
}

TEST_CASE("holdout split is deterministic, disjoint, and covering") {
  corpus::GenerationConfig gen;
  gen.easy_count = 6;
  gen.medium_count = 3;
  gen.hard_count = 1;
  corpus::Corpus c = corpus::generate_corpus(gen, 5);

  auto [train_a, hold_a] = config::holdout_split(c, 0.2, 77);
  auto [train_b, hold_b] = config::holdout_split(c, 0.2, 77);
  CHECK(train_a == train_b);
  CHECK(hold_a == hold_b);
  CHECK(hold_a.size() == 2);  // floor(0.2 * 10)
  CHECK(train_a.size() + hold_a.size() == c.problems.size());

  std::set<std::string> all(train_a.begin(), train_a.end());
  for (const auto& id : hold_a) CHECK(all.insert(id).second);
  CHECK(all.size() == c.problems.size());

  auto [train_c, hold_c] = config::holdout_split(c, 0.0, 77);
  CHECK(hold_c.empty());
  CHECK(train_c.size() == c.problems.size());
}
