#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "rlvr/corpus.hpp"
#include "rlvr/judge.hpp"
#include "rlvr/warmstart.hpp"

using namespace rlvr;
using namespace rlvr::warmstart;

namespace {

corpus::Corpus small_corpus(std::uint64_t seed = 7) {
  corpus::GenerationConfig cfg;
  cfg.easy_count = 4;
  cfg.medium_count = 3;
  cfg.hard_count = 2;
  return corpus::generate_corpus(cfg, seed);
}

corpus::Corpus hard_only_corpus() {
  corpus::GenerationConfig cfg;
  cfg.easy_count = 0;
  cfg.medium_count = 0;
  cfg.hard_count = 6;
  return corpus::generate_corpus(cfg, 13);
}

}  // namespace

TEST_CASE("strategy names round trip") {
  for (auto s : {Strategy::kBasic, Strategy::kArena, Strategy::kTwiceHard}) {
    CHECK(strategy_from_name(strategy_name(s)) == s);
  }
  CHECK_THROWS(strategy_from_name("bogus"));
}

TEST_CASE("curate_basic: one weighted example per problem") {
  corpus::Corpus c = small_corpus();
  auto examples = curate_basic(c);
  REQUIRE(examples.size() == c.problems.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    CHECK(examples[i].problem_id == c.problems[i].id);
    CHECK(examples[i].weight == 1.0);
    CHECK(examples[i].target == c.problems[i].reference);
    CHECK(seen.insert(examples[i].problem_id).second);
  }
}

TEST_CASE("supervised training drives the loss down") {
  corpus::Corpus c = small_corpus();
  policy::PolicyDims dims;
  dims.t_max = c.config.t_max;
  auto examples = curate_basic(c, dims.feature_dim);
  policy::PolicyParams params = policy::PolicyParams::zero_init(dims);
  optim::OptimizerState opt = optim::OptimizerState::zeros(dims);
  optim::AdamConfig adam;

  double first = supervised_step(params, opt, examples, adam);
  double last = first;
  for (int epoch = 0; epoch < 40; ++epoch) {
    last = supervised_step(params, opt, examples, adam);
  }
  CHECK(last < first * 0.5);
}

TEST_CASE("run_warmstart produces a policy that solves easy problems") {
  corpus::Corpus c = small_corpus();
  policy::PolicyDims dims;
  dims.t_max = c.config.t_max;
  CurationPlan plan;
  policy::PolicyParams params = run_warmstart(c, plan, dims, 7);

  // Greedy decode should recover at least one easy reference behavior.
  int solved = 0;
  for (const auto& p : c.problems) {
    auto features = policy::problem_features(p, dims.feature_dim);
    auto prog = policy::greedy_decode(params, features, dims.t_max);
    if (judge::judge(prog, p).all_passed) ++solved;
  }
  CHECK(solved >= 1);
}

TEST_CASE("curate_arena output is a subset of the corpus") {
  corpus::Corpus c = small_corpus();
  CurationPlan plan;
  std::vector<CurationRecord> report;
  auto examples = curate_arena(c, plan.folds, plan, 3, &report);

  std::set<std::string> corpus_ids;
  for (const auto& p : c.problems) corpus_ids.insert(p.id);
  std::set<std::string> example_ids;
  for (const auto& e : examples) {
    CHECK(corpus_ids.count(e.problem_id) == 1);
    CHECK(example_ids.insert(e.problem_id).second);  // no duplicates
    CHECK(e.weight == 1.0);
  }

  // Every corpus problem has a curation record; retained flags agree with
  // the example list.
  REQUIRE(report.size() == c.problems.size());
  for (const auto& r : report) {
    CHECK(r.retained == (example_ids.count(r.id) == 1));
    if (r.probe_pass_count >= 0) {
      CHECK(r.probe_pass_count <= plan.probe_rollouts);
      // Zero-pass rule: retained iff no probe rollout passed.
      CHECK(r.retained == (r.probe_pass_count == 0));
    }
  }
}

TEST_CASE("a probe that fails everything makes arena keep the full corpus") {
  corpus::Corpus c = hard_only_corpus();
  CurationPlan plan;
  plan.probe_epochs = 0;  // probe stays at zero init and solves nothing
  auto examples = curate_arena(c, plan.folds, plan, 5);
  CHECK(examples.size() == c.problems.size());
}

TEST_CASE("curate_twice_hard covers the corpus once with weights 1 and 2") {
  corpus::Corpus c = small_corpus();
  CurationPlan plan;
  std::vector<CurationRecord> arena_report;
  curate_arena(c, plan.folds, plan, 9, &arena_report);
  // Arena-identified hard problems: probed (fold > 1) and retained. The
  // fold-1 seed examples are kept unconditionally, not identified as hard.
  std::set<std::string> arena_ids;
  for (const auto& r : arena_report) {
    if (r.fold > 1 && r.retained) arena_ids.insert(r.id);
  }

  std::vector<CurationRecord> report;
  auto examples = curate_twice_hard(c, plan.folds, plan, 9, &report);
  REQUIRE(examples.size() == c.problems.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    CHECK(examples[i].problem_id == c.problems[i].id);
    double expected = arena_ids.count(examples[i].problem_id) ? 2.0 : 1.0;
    CHECK(examples[i].weight == expected);
  }
}

TEST_CASE("curation is deterministic in the seed") {
  corpus::Corpus c = small_corpus();
  CurationPlan plan;
  auto a = curate_twice_hard(c, plan.folds, plan, 4);
  auto b = curate_twice_hard(c, plan.folds, plan, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].problem_id == b[i].problem_id);
    CHECK(a[i].weight == b[i].weight);
  }
}

TEST_CASE("curation report serializes as JSONL") {
  corpus::Corpus c = small_corpus();
  CurationPlan plan;
  std::vector<CurationRecord> report;
  curate_twice_hard(c, plan.folds, plan, 2, &report);
  std::string path = "test_curation_report.jsonl";
  save_curation_report(report, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == report.size() + 1);  // header + one record per problem
  std::remove(path.c_str());
}
