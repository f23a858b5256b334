#include <mutex>

#include "doctest.h"

#include "guiagent/agent_loop.hpp"
#include "guiagent/policies.hpp"
#include "guiagent/sim_env.hpp"
#include "guiagent/trace_io.hpp"

using namespace guiagent;

namespace {

Step blank_step(int i, const std::string& tag) {
  Step s;
  s.index = i;
  s.observation = Observation::make({100, 100}, {{"e", ElementType::Label, {0, 0, 1, 1}, tag, {}}});
  s.thought = "thought " + std::to_string(i);
  s.action = Action::wait();
  s.raw = "Action: Wait()";
  return s;
}

// Records every context it is shown, then answers like the oracle.
class RecordingPolicy final : public PolicyClient {
 public:
  std::string respond(const PromptContext& ctx, std::uint64_t seed) const override {
    {
      std::lock_guard lock(mu_);
      contexts_.push_back(ctx);
    }
    return inner_.respond(ctx, seed);
  }
  std::string id() const override { return "recording"; }
  std::vector<PromptContext> contexts() const {
    std::lock_guard lock(mu_);
    return contexts_;
  }

 private:
  OraclePolicy inner_;
  mutable std::mutex mu_;
  mutable std::vector<PromptContext> contexts_;
};

Task one_field_form() {
  Task t;
  t.task_id = "form_one";
  t.app = "form";
  t.instruction = "Enter the name Ann and submit";
  t.params = {{"fields", "name"}, {"value.name", "Ann"}, {"autofocus", "true"}};
  t.seed = 7;
  t.goal = "form.submitted";
  t.oracle_steps = 3;
  return t;
}

}  // namespace

TEST_CASE("window_context examples") {
  std::vector<Step> hist;
  for (int i = 0; i < 7; ++i) hist.push_back(blank_step(i, "s" + std::to_string(i)));
  const Observation cur = Observation::make({100, 100}, {});

  auto ctx = window_context("do it", hist, cur, 5);
  REQUIRE(ctx.observations.size() == 5);
  CHECK(ctx.observations[0].step_index == 3);
  CHECK(ctx.observations[3].step_index == 6);
  CHECK(ctx.observations[4].step_index == 7);
  CHECK(ctx.current() == cur);
  REQUIRE(ctx.history.size() == 7);
  CHECK(ctx.history[0].thought == "thought 0");

  auto empty = window_context("do it", {}, cur, 5);
  CHECK(empty.history.empty());
  CHECK(empty.observations.size() == 1);

  auto short_hist = window_context("do it", std::span(hist).first(4), cur, 5);
  CHECK(short_hist.observations.size() == 5);
  CHECK(short_hist.observations[0].step_index == 0);

  auto n1 = window_context("do it", hist, cur, 1);
  CHECK(n1.observations.size() == 1);
  CHECK(n1.history.size() == 7);

  CHECK_THROWS_AS(window_context("do it", hist, cur, 0), Error);
}

TEST_CASE("parse_policy_output examples") {
  auto a = parse_policy_output("Thought: open the menu\nAction: Click(0.1000, 0.2000)");
  CHECK(a.thought == "open the menu");
  CHECK(a.action_line == "Click(0.1000, 0.2000)");
  auto b = parse_policy_output("Action: Finished()");
  CHECK_FALSE(b.thought.has_value());
  CHECK(b.action_line == "Finished()");
  try {
    parse_policy_output("just rambling");
    FAIL("expected MissingAction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingAction);
  }
  auto c = parse_policy_output("Action: Wait()\nThought: again\nAction: Finished()\ntrailing");
  CHECK(c.action_line == "Finished()");
}

TEST_CASE("oracle solves the one-field form in three steps") {
  const Task t = one_field_form();
  SimEnv env(TaskRegistry({t}));
  OraclePolicy oracle;
  const Trace tr = run_episode(t, env, oracle, {});
  REQUIRE(tr.steps.size() == 3);
  CHECK(tr.termination == Termination::Finished);
  CHECK(tr.steps.back().action == Action::finished());
  CHECK(episode_succeeded(tr, env));
}

TEST_CASE("budget exhaustion and call-user termination") {
  SimEnv env;
  const Task& t = env.registry().get("form_contact");
  FixedPolicy wait("Action: Wait()", "wait");
  const Trace w = run_episode(t, env, wait, {4, 5, 0});
  CHECK(w.steps.size() == 4);
  CHECK(w.termination == Termination::BudgetExhausted);
  CHECK_FALSE(episode_succeeded(w, env));

  FixedPolicy call("Action: CallUser()", "calluser");
  const Trace c = run_episode(t, env, call, {});
  CHECK(c.steps.size() == 1);
  CHECK(c.termination == Termination::CallUser);
  CHECK_FALSE(episode_succeeded(c, env));

  FixedPolicy finish("Action: Finished()", "finish");
  const Trace f = run_episode(t, env, finish, {});
  CHECK(f.termination == Termination::Finished);
  CHECK_FALSE(episode_succeeded(f, env));
}

TEST_CASE("malformed output is recorded and replaced by Wait") {
  SimEnv env;
  const Task& t = env.registry().get("form_contact");
  FixedPolicy junk("I am not sure", "junk");
  const Trace tr = run_episode(t, env, junk, {3, 5, 0});
  REQUIRE(tr.steps.size() == 3);
  for (const auto& s : tr.steps) {
    CHECK(s.action == Action::wait());
    CHECK(s.raw == "I am not sure");
  }
  FixedPolicy wrong_platform("Action: PressBack()", "back");
  const Trace p = run_episode(t, env, wrong_platform, {2, 5, 0});
  CHECK(p.steps[0].action == Action::wait());
  CHECK(p.steps[0].raw == "Action: PressBack()");
}

TEST_CASE("reset failure ends with env_error") {
  Task t = one_field_form();
  t.app = "missing";
  SimEnv env(TaskRegistry({t}));
  OraclePolicy oracle;
  const Trace tr = run_episode(t, env, oracle, {});
  CHECK(tr.steps.empty());
  CHECK(tr.termination == Termination::EnvError);
}

TEST_CASE("episodes are deterministic and respect the window") {
  SimEnv env;
  auto noisy = make_policy("scripted:noisy-oracle:0.5");
  for (const Task& t : env.registry().tasks()) {
    for (int window : {1, 5, 8}) {
      const EpisodeConfig cfg{15, window, 99};
      const Trace a = run_episode(t, env, *noisy, cfg);
      const Trace b = run_episode(t, env, *noisy, cfg);
      CHECK(io::trace_to_record(a) == io::trace_to_record(b));
      CHECK(a.steps.size() <= 15);

      RecordingPolicy rec;
      const Trace r = run_episode(t, env, rec, {15, window, 1});
      const auto seen = rec.contexts();
      REQUIRE(seen.size() == r.steps.size());
      for (std::size_t i = 0; i < seen.size(); ++i) {
        CHECK(static_cast<int>(seen[i].observations.size()) <= window);
        CHECK(seen[i].history.size() == i);
        CHECK(seen[i].current() == r.steps[i].observation);
      }
    }
  }
}

TEST_CASE("step observation equals the state after the previous action") {
  SimEnv env;
  auto noisy = make_policy("scripted:noisy-oracle:0.3");
  for (const Task& t : env.registry().tasks()) {
    const Trace tr = run_episode(t, env, *noisy, {15, 5, 4});
    SimEnv check;
    std::string digest = check.reset(t).digest;
    for (const Step& s : tr.steps) {
      CHECK(s.observation.digest == digest);
      digest = check.apply_action(s.action).digest;
    }
  }
}

TEST_CASE("policy specs") {
  CHECK(make_policy("scripted:oracle")->id() == "scripted:oracle");
  CHECK(make_policy("scripted:wait")->respond({}, 0).find("Wait()") != std::string::npos);
  CHECK_THROWS_AS(make_policy("scripted:nonsense"), Error);
  CHECK_THROWS_AS(make_policy("scripted:noisy-oracle:1.5"), Error);
}
