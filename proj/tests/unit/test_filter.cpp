#include <sstream>

#include "doctest.h"

#include "../support/traces.hpp"
#include "guiagent/filter_pipeline.hpp"
#include "guiagent/util.hpp"

using namespace guiagent;

namespace {

class ConstScorer final : public ScorerClient {
 public:
  explicit ConstScorer(double s) : s_(s) {}
  double score(const std::string&, const Trace&) const override {
    if (s_ < 0) throw Error(ErrorCode::ScorerFailure, "scorer down");
    return s_;
  }
  std::string id() const override { return "const"; }

 private:
  double s_;
};

std::vector<Action> with_misses(SimEnv& env, const Task& task, int misses) {
  std::vector<Action> acts(static_cast<std::size_t>(misses), Action::click({0.99, 0.99}));
  auto rest = testing::oracle_actions(env, task);
  acts.insert(acts.end(), rest.begin(), rest.end());
  return acts;
}

}  // namespace

TEST_CASE("rule filter examples") {
  SimEnv env;
  const Task& task = env.registry().get("form_contact");
  const Trace three = testing::scripted_trace(env, task, with_misses(env, task, 3));
  const FilterVerdict v3 = rule_filter(three, env);
  CHECK(v3.decision == FilterDecision::Drop);
  CHECK(v3.reason.starts_with("redundant actions"));

  const Trace two = testing::scripted_trace(env, task, with_misses(env, task, 2));
  CHECK(rule_filter(two, env).decision == FilterDecision::Keep);

  const Trace oracle = testing::scripted_trace(env, task, testing::oracle_actions(env, task));
  CHECK(rule_filter(oracle, env).decision == FilterDecision::Keep);

  // Distinct no-effect actions that end the budget on one screen.
  const Trace stuck = testing::scripted_trace(
      env, task, {Action::click({0.99, 0.99}), Action::wait(), Action::click({0.98, 0.98}), Action::wait()});
  const FilterVerdict vs = rule_filter(stuck, env);
  CHECK(vs.decision == FilterDecision::Drop);
  CHECK(vs.reason.starts_with("stuck loop"));

  Trace forged = oracle;
  forged.steps[1].observation = forged.steps[0].observation;
  try {
    rule_filter(forged, env);
    FAIL("expected ReplayMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ReplayMismatch);
  }
}

TEST_CASE("score filter boundary") {
  Trace t;
  CHECK(score_filter(t, ConstScorer(0.9), 0.5).decision == FilterDecision::Keep);
  CHECK(score_filter(t, ConstScorer(0.5), 0.5).decision == FilterDecision::Keep);
  const FilterVerdict low = score_filter(t, ConstScorer(0.49), 0.5);
  CHECK(low.decision == FilterDecision::Drop);
  CHECK(low.score == 0.49);
  CHECK_THROWS_AS(score_filter(t, ConstScorer(-1), 0.5), Error);
}

TEST_CASE("review truncation") {
  SimEnv env;
  const Task& task = env.registry().get("form_contact");
  const Trace t = testing::scripted_trace(env, task, testing::oracle_actions(env, task));
  REQUIRE(t.steps.size() == 6);

  const auto cut = apply_review(t, {t.trace_id, 3, FilterDecision::Truncate, "r", ""});
  REQUIRE(cut.has_value());
  CHECK(cut->steps.size() == 3);
  CHECK(cut->termination == Termination::Truncated);
  CHECK(cut->steps[2] == t.steps[2]);
  CHECK(apply_review(t, {t.trace_id, 4, FilterDecision::Truncate, "r", ""})->steps.size() == 4);
  CHECK_FALSE(apply_review(t, {t.trace_id, 0, FilterDecision::Truncate, "r", ""}).has_value());
  CHECK(apply_review(t, {t.trace_id, 2, FilterDecision::Keep, "r", ""}) == t);
  CHECK_FALSE(apply_review(t, {t.trace_id, 2, FilterDecision::Drop, "r", ""}).has_value());
  try {
    apply_review(t, {t.trace_id, 6, FilterDecision::Truncate, "r", ""});
    FAIL("expected IndexOutOfBounds");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndexOutOfBounds);
  }
  CHECK(io::trace_from_record(io::trace_to_record(*cut)) == *cut);
}

TEST_CASE("pipeline keeps only good traces and reports every input") {
  SimEnv env;
  const auto& reg = env.registry();
  std::vector<Trace> raw;
  for (const Task& task : reg.tasks()) {
    raw.push_back(testing::scripted_trace(env, task, testing::oracle_actions(env, task)));
    raw.push_back(testing::scripted_trace(env, task, std::vector<Action>(6, Action::wait())));
    raw.push_back(testing::scripted_trace(env, task, {Action::finished()}));
  }
  ReplayScorer scorer(reg);
  const PipelineResult res = run_pipeline(raw, reg, scorer, {});
  REQUIRE(res.report.size() == raw.size());
  REQUIRE(res.output.size() == reg.tasks().size());
  for (std::size_t i = 0; i < res.output.size(); ++i) CHECK(res.output[i] == raw[3 * i]);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CHECK(res.report[i].trace_id == raw[i].trace_id);
    CHECK(res.report[i].output_id.has_value() == (i % 3 == 0));
  }
  CHECK(res.report[1].verdicts.size() == 1);
  CHECK(res.report[2].verdicts.size() == 2);
  CHECK(res.report[2].verdicts[1].score == 0.2);

  CHECK(run_pipeline({}, reg, scorer, {}).report.empty());

  FilterConfig par;
  par.workers = 8;
  std::ostringstream a, b;
  write_report(a, res.report);
  write_report(b, run_pipeline(raw, reg, scorer, {}, par).report);
  CHECK(a.str() == b.str());
}

TEST_CASE("pipeline applies annotations and survives stage errors") {
  SimEnv env;
  const auto& reg = env.registry();
  const Task& task = reg.get("files_delete_report");
  const Trace good = testing::scripted_trace(env, task, testing::oracle_actions(env, task));
  Trace broken = good;
  broken.steps[2].observation = broken.steps[0].observation;
  broken.trace_id = io::compute_trace_id(broken);

  std::map<std::string, ReviewAnnotation> anns{{good.trace_id, {good.trace_id, 2, FilterDecision::Truncate, "r", ""}}};
  const PipelineResult res = run_pipeline({good, broken}, reg, ReplayScorer(reg), anns);
  REQUIRE(res.output.size() == 1);
  CHECK(res.output[0].steps.size() == 2);
  CHECK(res.report[0].verdicts.back().decision == FilterDecision::Truncate);
  CHECK(res.report[1].error.has_value());
  CHECK_FALSE(res.report[1].output_id.has_value());

  FilterConfig none;
  none.review_fraction = 0.0;
  const PipelineResult skipped = run_pipeline({good}, reg, ReplayScorer(reg), anns, none);
  CHECK(skipped.output[0] == good);
}

TEST_CASE("review sampling is deterministic and roughly proportional") {
  int picked = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string id = to_hex(splitmix64(static_cast<std::uint64_t>(i)));
    const bool a = selected_for_review(id, 0.3);
    CHECK(a == selected_for_review(id, 0.3));
    if (a) ++picked;
  }
  CHECK(picked > 2800);
  CHECK(picked < 3200);
  CHECK(selected_for_review("x", 1.0));
  CHECK_FALSE(selected_for_review("x", 0.0));
}

TEST_CASE("review annotation json") {
  const ReviewAnnotation a{"abc", 3, FilterDecision::Truncate, "ann", "note"};
  CHECK(review_annotation_from_json(review_annotation_to_json(a)) == a);
}
