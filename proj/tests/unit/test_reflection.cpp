#include <sstream>

#include "doctest.h"

#include "../support/traces.hpp"
#include "guiagent/reflection.hpp"

using namespace guiagent;

namespace {

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

Action click_on(SimEnv& env, const std::string& id) { return Action::click(env.observation().find(id)->box.center()); }

// Loads the news page, then closes the tab where the bookmark icon was meant,
// then clicks the address bar instead of reopening the tab.
Trace closed_tab_trace(SimEnv& env) {
  const Task& task = env.registry().get("browser_bookmark_news");
  env.reset(task);
  std::vector<Action> acts;
  auto step = [&](Action a) {
    acts.push_back(a);
    env.apply_action(a);
  };
  step(click_on(env, "address"));
  step(Action::type("news.example.com"));
  step(click_on(env, "go"));
  step(click_on(env, "close_tab"));
  step(click_on(env, "address"));
  acts.push_back(Action::call_user());
  return testing::scripted_trace(env, task, acts);
}

}  // namespace

TEST_CASE("error correction: bookmark instead of close") {
  SimEnv env;
  const Trace t = closed_tab_trace(env);
  env.reset(env.registry().get("browser_bookmark_news"));
  for (int i = 0; i < 3; ++i) env.apply_action(t.steps[static_cast<std::size_t>(i)].action);
  const Action bookmark = click_on(env, "bookmark");

  const Correction c{t.trace_id, 3, "save the page with the star icon", bookmark, CorrectionKind::ErrorCorrection};
  const PreferencePair p = build_error_correction_pair(t, c);
  CHECK(p.prefix.size() == 3);
  CHECK(p.current == t.steps[3].observation);
  CHECK(p.rejected.action == t.steps[3].action);
  CHECK(p.chosen.action == bookmark);
  CHECK(p.task_id == "browser_bookmark_news");
  CHECK_NOTHROW(verify_pair_prefix(p, env));

  env.reset(env.registry().get("browser_bookmark_news"));
  for (int i = 0; i < 3; ++i) env.apply_action(t.steps[static_cast<std::size_t>(i)].action);
  env.apply_action(bookmark);
  CHECK(env.check_goal());

  const Correction same{t.trace_id, 3, "x", t.steps[3].action, CorrectionKind::ErrorCorrection};
  CHECK(error_of([&] { build_error_correction_pair(t, same); }) == ErrorCode::IdenticalPair);
  const Correction far{t.trace_id, 40, "x", bookmark, CorrectionKind::ErrorCorrection};
  CHECK(error_of([&] { build_error_correction_pair(t, far); }) == ErrorCode::IndexOutOfBounds);

  const Correction first{t.trace_id, 0, "x", Action::hotkey("ctrl+l"), CorrectionKind::ErrorCorrection};
  const PreferencePair p0 = build_pair(t, first);
  CHECK(p0.prefix.empty());
  CHECK(p0.current == t.steps[0].observation);
}

TEST_CASE("post reflection: reopen the closed tab") {
  SimEnv env;
  const Trace t = closed_tab_trace(env);
  env.reset(env.registry().get("browser_bookmark_news"));
  for (int i = 0; i < 4; ++i) env.apply_action(t.steps[static_cast<std::size_t>(i)].action);
  const Action reopen = click_on(env, "reopen");

  const Correction c{t.trace_id, 4, "I closed the tab by mistake; reopen it", reopen, CorrectionKind::PostReflection};
  const PreferencePair p = build_post_reflection_pair(t, c);
  REQUIRE(p.prefix.size() == 4);
  CHECK(p.prefix[3] == t.steps[3]);
  CHECK(p.rejected.action == t.steps[4].action);
  CHECK(p.chosen.action == reopen);
  CHECK_NOTHROW(verify_pair_prefix(p, env));

  const Correction same{t.trace_id, 4, "x", t.steps[4].action, CorrectionKind::PostReflection};
  CHECK(error_of([&] { build_post_reflection_pair(t, same); }) == ErrorCode::IdenticalPair);

  Trace ends_at_error = t;
  ends_at_error.steps.resize(4);
  ends_at_error.termination = Termination::BudgetExhausted;
  ends_at_error.trace_id = io::compute_trace_id(ends_at_error);
  const Correction past{ends_at_error.trace_id, 4, "x", reopen, CorrectionKind::PostReflection};
  CHECK(error_of([&] { build_post_reflection_pair(ends_at_error, past); }) == ErrorCode::IndexOutOfBounds);
  const Correction at_zero{t.trace_id, 0, "x", reopen, CorrectionKind::PostReflection};
  CHECK(error_of([&] { build_post_reflection_pair(t, at_zero); }) == ErrorCode::IndexOutOfBounds);
}

TEST_CASE("scripted corrections find the first error") {
  SimEnv env;
  const Trace t = closed_tab_trace(env);
  const auto cs = scripted_corrections(t, env);
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].kind == CorrectionKind::ErrorCorrection);
  CHECK(cs[0].step_index == 3);
  CHECK(cs[1].kind == CorrectionKind::PostReflection);
  CHECK(cs[1].step_index == 4);
  for (const auto& c : cs) CHECK_NOTHROW(verify_pair_prefix(build_pair(t, c), env));

  const Task& task = env.registry().get("browser_bookmark_news");
  const Trace clean = testing::scripted_trace(env, task, testing::oracle_actions(env, task));
  CHECK(scripted_corrections(clean, env).empty());

  PreferencePair forged = build_pair(t, cs[0]);
  forged.current = t.steps[0].observation;
  CHECK(error_of([&] { verify_pair_prefix(forged, env); }) == ErrorCode::ReplayMismatch);
}

TEST_CASE("dpo dataset round trip and windowing") {
  SimEnv env;
  const Trace t = closed_tab_trace(env);
  const auto cs = scripted_corrections(t, env);
  std::vector<PreferencePair> pairs;
  for (const auto& c : cs) pairs.push_back(build_pair(t, c));

  std::stringstream buf;
  emit_dpo_dataset(buf, pairs, 2);
  const auto recs = read_dpo_dataset(buf);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].chosen.action == pairs[0].chosen.action);
  CHECK(recs[1].rejected.action == pairs[1].rejected.action);
  CHECK(recs[1].kind == CorrectionKind::PostReflection);
  CHECK(recs[1].context.at("observations").size() == 2);
  CHECK(recs[1].context.at("history").size() == 4);

  std::stringstream empty;
  emit_dpo_dataset(empty, {});
  CHECK(empty.str() == "{\"count\":0,\"format\":\"dpo-pairs\",\"version\":1}\n");
  CHECK(read_dpo_dataset(empty).empty());
}

TEST_CASE("seven prior steps with window five keep five observations") {
  SimEnv env;
  const Task& task = env.registry().get("form_signup");
  const auto acts = testing::oracle_actions(env, task);
  std::vector<Action> wrong(7, Action::click({0.99, 0.99}));
  wrong.push_back(Action::wait());
  const Trace t = testing::scripted_trace(env, task, wrong);
  const Correction c{t.trace_id, 7, "start with the first field", acts[0], CorrectionKind::ErrorCorrection};
  const DpoRecord r = to_dpo_record(build_pair(t, c));
  CHECK(r.context.at("observations").size() == 5);
  CHECK(r.context.at("history").size() == 7);
}

TEST_CASE("correction lines") {
  SimEnv env;
  const Trace t = closed_tab_trace(env);
  const auto cs = scripted_corrections(t, env);
  std::stringstream in;
  in << correction_to_json(cs[0]).dump() << "\n{\"type\":\"review\"}\n\n" << correction_to_json(cs[1]).dump() << "\n";
  const auto back = read_corrections(in, [](const std::string&) { return Platform::Desktop; });
  CHECK(back == cs);
  auto bad = correction_to_json(cs[0]);
  bad["action"] = "PressBack()";
  CHECK(error_of([&] { correction_from_json(bad, Platform::Desktop); }) == ErrorCode::Platform);
}
