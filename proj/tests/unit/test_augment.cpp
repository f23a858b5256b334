#include <atomic>
#include <mutex>

#include "doctest.h"

#include "../support/traces.hpp"
#include "guiagent/thought_augment.hpp"
#include "guiagent/util.hpp"

using namespace guiagent;

namespace {

// Remembers the prompts it was given and delegates to the scripted annotator.
class RecordingAnnotator final : public AnnotatorClient {
 public:
  Annotation annotate(const PromptContext& ctx, const std::optional<Action>& next, Language lang,
                      std::uint64_t seed) const override {
    std::lock_guard lock(mu_);
    prompts.push_back(ctx);
    return inner_.annotate(ctx, next, lang, seed);
  }
  std::string id() const override { return "recording"; }
  mutable std::vector<PromptContext> prompts;

 private:
  ScriptedAnnotator inner_;
  mutable std::mutex mu_;
};

class FailingAnnotator final : public AnnotatorClient {
 public:
  explicit FailingAnnotator(int failures) : failures_(failures) {}
  Annotation annotate(const PromptContext&, const std::optional<Action>&, Language, std::uint64_t) const override {
    if (calls_++ < failures_) throw Error(ErrorCode::Transport, "unreachable");
    return {"ok", std::nullopt};
  }
  std::string id() const override { return "failing"; }
  int calls() const { return calls_; }

 private:
  int failures_;
  mutable std::atomic<int> calls_{0};
};

// Emits the gold action with probability 1/2 per seed, a wrong click otherwise.
class CoinPolicy final : public PolicyClient {
 public:
  explicit CoinPolicy(Action gold) : gold_(std::move(gold)) {}
  std::string respond(const PromptContext&, std::uint64_t seed) const override {
    calls.fetch_add(1);
    if (splitmix64(seed) & 1U) return format_policy_output("right", gold_);
    return format_policy_output("wrong", Action::click({0.0, 0.0}));
  }
  std::string id() const override { return "coin"; }
  mutable std::atomic<int> calls{0};

 private:
  Action gold_;
};

}  // namespace

TEST_CASE("actre feeds earlier thoughts into later prompts") {
  SimEnv env;
  const Task& task = env.registry().get("files_open_song");
  auto actions = testing::oracle_actions(env, task);
  actions.resize(2);
  Trace t = testing::scripted_trace(env, task, actions);
  for (auto& s : t.steps) s.thought.reset();
  t.trace_id = io::compute_trace_id(t);

  RecordingAnnotator ann;
  const Trace out = actre_annotate(t, ann);
  REQUIRE(ann.prompts.size() == 2);
  REQUIRE(out.steps[0].thought.has_value());
  REQUIRE(out.steps[1].thought.has_value());
  REQUIRE(ann.prompts[1].history.size() == 1);
  CHECK(ann.prompts[1].history[0].thought == out.steps[0].thought);
  CHECK(ann.prompts[1].observations.size() == 2);
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    CHECK(out.steps[i].action == t.steps[i].action);
    CHECK(out.steps[i].observation == t.steps[i].observation);
    CHECK(out.steps[i].raw == t.steps[i].raw);
  }
  CHECK(out.trace_id != t.trace_id);
  CHECK(out.metadata.at(std::string(meta::kDerivedFrom)) == t.trace_id);
  CHECK(out.steps[0].thought->starts_with("[task_decomposition]"));
}

TEST_CASE("actre edge cases") {
  Trace empty;
  empty.instruction = "nothing";
  empty.termination = Termination::EnvError;
  ScriptedAnnotator ann;
  CHECK(actre_annotate(empty, ann) == empty);

  SimEnv env;
  const Task& task = env.registry().get("form_feedback");
  const Trace t = testing::scripted_trace(env, task, testing::oracle_actions(env, task));
  const Trace out = actre_annotate(t, ann);
  for (std::size_t i = 0; i < t.steps.size(); ++i) CHECK(out.steps[i].thought != t.steps[i].thought);
  CHECK(actre_annotate(t, ann) == out);

  ActReConfig zh;
  zh.language = Language::Zh;
  CHECK(actre_annotate(t, ann, zh).steps[0].thought->find("[zh]") != std::string::npos);

  FailingAnnotator flaky(2);
  CHECK_NOTHROW(actre_annotate(t, flaky));
  FailingAnnotator dead(1000);
  try {
    actre_annotate(t, dead);
    FAIL("expected AnnotatorFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AnnotatorFailure);
  }
  CHECK(dead.calls() == 3);
}

TEST_CASE("bootstrap with a half-right policy") {
  const Action gold = Action::click({0.5, 0.5});
  PromptContext ctx;
  ctx.instruction = "x";
  ctx.observations.push_back({0, Observation::make({100, 100}, {})});
  int none = 0;
  double tries = 0;
  const int trials = 4000;
  for (int s = 0; s < trials; ++s) {
    CoinPolicy p(gold);
    auto got = bootstrap_thought(ctx, p, gold, std::nullopt, {}, static_cast<std::uint64_t>(s));
    CHECK(p.calls.load() <= 16);
    if (!got) {
      ++none;
      continue;
    }
    CHECK(got->action == gold);
    CHECK(got->thought == "right");
    tries += got->tries;
  }
  // P(no match in 16 tries) = 2^-16, so 4000 seeds expect 0.06 misses.
  CHECK(none <= 1);
  // Geometric with p = 1/2 truncated at 16: mean just under 2, sd about 1.4.
  CHECK(tries / (trials - none) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("bootstrap: first sample and exhaustion") {
  PromptContext ctx;
  ctx.instruction = "x";
  ctx.observations.push_back({0, Observation::make({100, 100}, {})});
  FixedPolicy finish("Thought: done\nAction: Finished()", "finish");
  auto got = bootstrap_thought(ctx, finish, Action::finished(), std::nullopt, {}, 1);
  REQUIRE(got.has_value());
  CHECK(got->tries == 1);
  CHECK(got->thought == "done");

  CoinPolicy never(Action::wait());
  BootstrapConfig cfg;
  cfg.max_try = 7;
  CHECK_FALSE(bootstrap_thought(ctx, never, Action::type("zzz"), std::nullopt, cfg, 1).has_value());
  CHECK(never.calls.load() == 7);
}

TEST_CASE("bootstrap box equality accepts any point in the gold box") {
  PromptContext ctx;
  ctx.instruction = "x";
  ctx.observations.push_back({0, Observation::make({100, 100}, {})});
  FixedPolicy near("Action: Click(0.4100, 0.4100)", "near");
  const Action gold = Action::click({0.45, 0.45});
  CHECK_FALSE(bootstrap_thought(ctx, near, gold, std::nullopt, {}, 0).has_value());
  auto got = bootstrap_thought(ctx, near, gold, NormBox{0.4, 0.4, 0.5, 0.5}, {}, 0);
  REQUIRE(got.has_value());
  CHECK(got->action == Action::click({0.41, 0.41}));
}

TEST_CASE("bootstrap_trace keeps actions") {
  SimEnv env;
  const Task& task = env.registry().get("settings_network");
  const Trace t = testing::scripted_trace(env, task, testing::oracle_actions(env, task));
  auto noisy = make_policy("scripted:noisy-oracle:0.5");
  BootstrapStats stats;
  const Trace out = bootstrap_trace(t, env, task, *noisy, {}, 3, &stats);
  CHECK(stats.steps == static_cast<int>(t.steps.size()));
  CHECK(stats.matched == stats.steps);
  for (std::size_t i = 0; i < t.steps.size(); ++i) CHECK(out.steps[i].action == t.steps[i].action);
}
