#include "doctest.h"

#include "../support/traces.hpp"
#include "guiagent/evaluation.hpp"

using namespace guiagent;

TEST_CASE("grounding hit on a closed box") {
  const NormBox box{0.2, 0.2, 0.4, 0.4};
  CHECK(grounding_hit({0.3, 0.3}, box));
  CHECK(grounding_hit({0.2, 0.4}, box));
  CHECK(grounding_hit({0.4, 0.2}, box));
  CHECK_FALSE(grounding_hit({0.41, 0.3}, box));
  CHECK_FALSE(grounding_hit({0.3, 0.1999}, box));
}

TEST_CASE("action match examples") {
  const NormBox box{0.2, 0.2, 0.4, 0.4};
  const StepJudgement in = action_match(Action::click({0.25, 0.35}), Action::click({0.3, 0.3}), box);
  CHECK(in.correct());
  REQUIRE(in.grounding_hit.has_value());
  CHECK(*in.grounding_hit);

  const StepJudgement out = action_match(Action::click({0.5, 0.5}), Action::click({0.3, 0.3}), box);
  CHECK(out.type_match);
  CHECK_FALSE(out.correct());

  CHECK_FALSE(action_match(Action::click({0.3, 0.3}), Action::type("a"), std::nullopt).type_match);
  CHECK_FALSE(action_match(Action::type("abc"), Action::type("abc "), std::nullopt).correct());
  CHECK(action_match(Action::type("abc"), Action::type("abc"), std::nullopt).correct());
  CHECK(action_match(Action::hotkey("shift+ctrl+a"), Action::hotkey("ctrl+shift+a"), std::nullopt).correct());
  CHECK(action_match(Action::click({0.3, 0.3}), Action::click({0.3, 0.3}), std::nullopt).correct());
  CHECK_FALSE(action_match(Action::click({0.3001, 0.3}), Action::click({0.3, 0.3}), std::nullopt).correct());
}

TEST_CASE("step success rate") {
  SimEnv env;
  const Task& task = env.registry().get("form_contact");
  const Trace gold = testing::scripted_trace(env, task, testing::oracle_actions(env, task));
  CHECK(step_success_rate(gold, gold) == 1.0);
  CHECK(step_success_rate(std::vector<Action>{}, std::vector<GoldStep>{}) == 1.0);

  const auto steps = gold_steps(gold);
  REQUIRE(steps.size() == gold.steps.size());
  CHECK(steps[0].box.has_value());
  CHECK(step_success_rate(std::vector<Action>{}, std::vector<GoldStep>(steps.begin(), steps.begin() + 3)) == 0.0);

  std::vector<GoldStep> four(steps.begin(), steps.begin() + 4);
  std::vector<Action> pred;
  for (const auto& g : four) pred.push_back(g.action);
  pred[1] = Action::wait();
  pred[3] = Action::type("wrong");
  CHECK(step_success_rate(pred, four) == 0.5);
  pred.push_back(Action::wait());
  CHECK(step_success_rate(pred, four) == doctest::Approx(2.0 / 5.0));
}

TEST_CASE("benchmark with scripted policies") {
  const TaskRegistry reg = TaskRegistry::bundled();
  BenchConfig cfg;
  cfg.runs = 3;
  const BenchReport oracle = run_benchmark(reg.tasks(), *make_policy("scripted:oracle"), cfg);
  CHECK(oracle.success_rate == 1.0);
  CHECK(oracle.tasks.size() == reg.tasks().size());
  for (const auto& t : oracle.tasks) CHECK(t.success.size() == 3);

  CHECK(run_benchmark(reg.tasks(), *make_policy("scripted:wait"), cfg).success_rate == 0.0);
  CHECK(run_benchmark(reg.tasks(), *make_policy("scripted:calluser"), cfg).success_rate == 0.0);

  auto noisy = make_policy("scripted:noisy-oracle:0.3");
  const BenchReport a = run_benchmark(reg.tasks(), *noisy, cfg);
  cfg.workers = 4;
  const BenchReport b = run_benchmark(reg.tasks(), *noisy, cfg);
  CHECK(bench_report_to_json(a) == bench_report_to_json(b));
  CHECK(a.success_rate > 0.0);
  CHECK(a.success_rate < 1.0);

  const BenchReport back = bench_report_from_json(bench_report_to_json(a));
  CHECK(bench_report_to_json(back) == bench_report_to_json(a));
}

TEST_CASE("best of n") {
  const TaskRegistry reg = TaskRegistry::bundled();
  const Task& task = reg.get("form_signup");
  auto noisy = make_policy("scripted:noisy-oracle:0.3");
  BenchConfig cfg;
  cfg.runs = 1;
  const BonResult one = best_of_n(task, *noisy, 1, cfg);
  REQUIRE(one.episodes.size() == 1);
  const BenchReport single = run_benchmark({task}, *noisy, cfg);
  CHECK(one.success == single.tasks[0].success[0]);

  const BonResult eight = best_of_n(task, *noisy, 8, cfg);
  CHECK(eight.episodes[0] == one.episodes[0]);
  bool any = false;
  for (bool e : eight.episodes) any = any || e;
  CHECK(eight.success == any);

  CHECK_FALSE(best_of_n(task, *make_policy("scripted:wait"), 8, cfg).success);
  const BenchReport rep = run_best_of_n(reg.tasks(), *make_policy("scripted:oracle"), 2, cfg);
  CHECK(rep.success_rate == 1.0);
  REQUIRE(rep.n_bon.has_value());
  CHECK(*rep.n_bon == 2);
}
