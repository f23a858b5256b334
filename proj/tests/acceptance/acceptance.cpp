// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "../support/testing.hpp"
#include "../support/traces.hpp"
#include "guiagent/bootstrap.hpp"
#include "guiagent/evaluation.hpp"
#include "guiagent/filter_pipeline.hpp"
#include "guiagent/preference.hpp"
#include "guiagent/reflection.hpp"
#include "guiagent/sft_export.hpp"
#include "guiagent/util.hpp"

using namespace guiagent;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Records every context it is shown and answers like the wrapped policy.
class RecordingPolicy final : public PolicyClient {
 public:
  explicit RecordingPolicy(std::shared_ptr<const PolicyClient> inner) : inner_(std::move(inner)) {}
  std::string respond(const PromptContext& ctx, std::uint64_t seed) const override {
    {
      std::lock_guard lock(mu_);
      seen.push_back(ctx);
    }
    return inner_->respond(ctx, seed);
  }
  std::string id() const override { return "recording"; }
  mutable std::vector<PromptContext> seen;

 private:
  std::shared_ptr<const PolicyClient> inner_;
  mutable std::mutex mu_;
};

// Plays the oracle but asks for the user where the oracle would finish.
class OracleThenCallUser final : public PolicyClient {
 public:
  std::string respond(const PromptContext& ctx, std::uint64_t seed) const override {
    const std::string out = oracle_.respond(ctx, seed);
    const PolicyOutput p = parse_policy_output(out);
    if (p.action_line == "Finished()") return format_policy_output("not sure", Action::call_user());
    return out;
  }
  std::string id() const override { return "oracle-then-calluser"; }

 private:
  OraclePolicy oracle_;
};

std::vector<Task> variants(const Task& base, int n, const std::string& tag) {
  std::vector<Task> out;
  for (int i = 0; i < n; ++i) {
    Task t = base;
    t.seed = derive_seed(base.seed, tag + std::to_string(i));
    t.task_id = base.task_id + "~" + tag + std::to_string(i);
    out.push_back(std::move(t));
  }
  return out;
}

Outcome grammar() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  const Platform platforms[] = {Platform::Desktop, Platform::Mobile, Platform::Shared};
  int ok = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Platform p = platforms[i % 3];
    const Action a = testing::generated_action(rng, p);
    try {
      if (parse_action(serialize_action(a), PlatformProfile(p)) == a) ++ok;
    } catch (const Error&) {
    }
  }
  std::ifstream in(testing::source_path("docs/golden-actions.txt"));
  int rows = 0;
  int stable = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t2 == std::string::npos) continue;
    const PlatformProfile profile(platform_from_string(line.substr(0, t1)));
    const std::string input = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string expected = line.substr(t2 + 1);
    ++rows;
    std::string got;
    try {
      got = serialize_action(parse_action(input, profile));
      if (got == expected && serialize_action(parse_action(got, profile)) == got) ++stable;
    } catch (const Error& e) {
      if ("!" + std::string(to_string(e.code())) == expected) ++stable;
    }
  }
  const double secs = seconds_since(t0);
  return {ok == n && rows > 0 && stable == rows && secs < 5.0,
          fmt("round trip %d/%d, golden %d/%d rows, %.2fs", ok, n, stable, rows, secs)};
}

Outcome windowing() {
  const TaskRegistry reg = TaskRegistry::bundled();
  SimEnv env;
  auto noisy = make_policy("scripted:noisy-oracle:0.3");
  const int windows[] = {1, 5, 8};
  int bad = 0;
  long contexts = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = windows[i % 3];
    const Task& task = reg.tasks()[static_cast<std::size_t>(i / 3) % reg.tasks().size()];
    RecordingPolicy rec(noisy);
    const Trace t = run_episode(task, env, rec, {15, n, static_cast<std::uint64_t>(i)});
    if (rec.seen.size() != t.steps.size()) ++bad;
    for (std::size_t k = 0; k < rec.seen.size(); ++k) {
      const PromptContext& c = rec.seen[k];
      ++contexts;
      bool good = static_cast<int>(c.observations.size()) <= n &&
                  c.observations.size() == std::min<std::size_t>(static_cast<std::size_t>(n), k + 1) &&
                  c.history.size() == k && c.current() == t.steps[k].observation;
      for (std::size_t j = 0; good && j < k; ++j) {
        good = c.history[j].action == t.steps[j].action && c.history[j].thought == t.steps[j].thought;
      }
      if (!good) ++bad;
    }
  }
  return {bad == 0, fmt("1000 episodes, %ld contexts, %d violations", contexts, bad)};
}

ToyPolicy random_toy(std::mt19937_64& rng, int states, int actions) {
  std::vector<std::string> s, a;
  for (int i = 0; i < states; ++i) s.push_back("s" + std::to_string(i));
  for (int i = 0; i < actions; ++i) a.push_back("a" + std::to_string(i));
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd l(states, actions);
  for (int i = 0; i < states; ++i)
    for (int j = 0; j < actions; ++j) l(i, j) = nd(rng);
  return ToyPolicy(s, a, l);
}

std::vector<PrefExample> random_pairs(std::mt19937_64& rng, const ToyPolicy& p, int n) {
  std::uniform_int_distribution<std::size_t> s(0, p.states().size() - 1);
  std::uniform_int_distribution<std::size_t> a(0, p.actions().size() - 1);
  std::vector<PrefExample> out;
  while (static_cast<int>(out.size()) < n) {
    const auto c = a(rng), r = a(rng);
    if (c != r) out.push_back({p.states()[s(rng)], p.actions()[c], p.actions()[r]});
  }
  return out;
}

// Per state, the chosen and rejected action sets are disjoint.
std::vector<PrefExample> non_conflicting_pairs(std::mt19937_64& rng, const ToyPolicy& p, int n) {
  std::map<std::string, std::vector<std::string>> chosen_side, rejected_side;
  for (const auto& s : p.states()) {
    for (const auto& a : p.actions()) (rng() & 1U ? chosen_side : rejected_side)[s].push_back(a);
    if (chosen_side[s].empty() || rejected_side[s].empty()) {
      chosen_side[s] = {p.actions().front()};
      rejected_side[s].assign(p.actions().begin() + 1, p.actions().end());
    }
  }
  std::uniform_int_distribution<std::size_t> sd(0, p.states().size() - 1);
  std::vector<PrefExample> out;
  for (int i = 0; i < n; ++i) {
    const std::string& s = p.states()[sd(rng)];
    const auto& cs = chosen_side[s];
    const auto& rs = rejected_side[s];
    out.push_back({s, cs[rng() % cs.size()], rs[rng() % rs.size()]});
  }
  return out;
}

Outcome dpo() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  double worst_ln2 = 0.0;
  double worst_grad = 0.0;
  for (int i = 0; i < 50; ++i) {
    const ToyPolicy ref = random_toy(rng, 4, 6);
    const ToyPolicy pol = random_toy(rng, 4, 6);
    const auto pairs = random_pairs(rng, pol, 25);
    worst_ln2 = std::max(worst_ln2, std::abs(dpo_loss(pairs, ref, ref, 0.1) - std::log(2.0)));
    worst_grad = std::max(worst_grad, dpo_grad_check(pol, ref, pairs, 0.1 + 0.02 * i, 1e-6));
  }
  long pairs_checked = 0;
  long monotone = 0;
  for (int i = 0; i < 40; ++i) {
    const ToyPolicy sft = random_toy(rng, 5, 7);
    const auto pairs = non_conflicting_pairs(rng, sft, 30);
    const ToyPolicy out = train_toy_policy(pairs, sft, {0.1, 1.0, 200, 1});
    for (const auto& p : pairs) {
      const double before = sft.log_prob(p.state_key, p.chosen) - sft.log_prob(p.state_key, p.rejected);
      const double after = out.log_prob(p.state_key, p.chosen) - out.log_prob(p.state_key, p.rejected);
      ++pairs_checked;
      if (after > before) ++monotone;
    }
  }
  const double secs = seconds_since(t0);
  return {worst_ln2 <= 1e-12 && worst_grad < 1e-5 && monotone == pairs_checked && secs < 30.0,
          fmt("|loss-ln2| max %.1e, grad rel err max %.1e, monotone %ld/%ld, %.2fs", worst_ln2, worst_grad, monotone,
              pairs_checked, secs)};
}

Outcome bradley_terry() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  int symmetric = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    if (pref_likelihood(a, a) == 0.5) ++symmetric;
    // Oracle: the logistic function written out directly.
    const double expected = 1.0 / (1.0 + std::exp(-(a - b)));
    worst = std::max(worst, std::abs(pref_likelihood(a, b) - expected));
  }
  return {symmetric == 1000 && worst <= 1e-12, fmt("symmetry %d/1000, identity max err %.1e", symmetric, worst)};
}

std::string pipeline_bytes(const std::vector<Trace>& raw, const TaskRegistry& reg, std::size_t workers,
                           std::size_t* kept) {
  FilterConfig cfg;
  cfg.workers = workers;
  const PipelineResult res = run_pipeline(raw, reg, ReplayScorer(reg), {}, cfg);
  std::ostringstream out;
  write_report(out, res.report);
  for (const auto& t : res.output) out << io::trace_to_record(t) << '\n';
  if (kept) *kept = res.output.size();
  return out.str();
}

Outcome filter() {
  const TaskRegistry bundled = TaskRegistry::bundled();
  std::vector<Task> tasks;
  for (const auto& t : bundled.tasks()) {
    for (auto& v : variants(t, 2, "f")) tasks.push_back(std::move(v));
  }
  const TaskRegistry reg(tasks);
  SimEnv env(reg);
  std::vector<Trace> raw;
  std::set<std::string> oracle_ids;
  auto oracle = make_policy("scripted:oracle");
  auto wait = make_policy("scripted:wait");
  auto finish = make_policy("scripted:finish");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    raw.push_back(run_episode(tasks[i], env, *oracle, {15, 5, i}));
    oracle_ids.insert(raw.back().trace_id);
    raw.push_back(run_episode(tasks[i], env, *wait, {15, 5, i}));
    raw.push_back(run_episode(tasks[i], env, *finish, {15, 5, i}));
  }
  std::size_t kept = 0;
  const std::string first = pipeline_bytes(raw, reg, 1, &kept);
  FilterConfig cfg;
  const PipelineResult res = run_pipeline(raw, reg, ReplayScorer(reg), {}, cfg);
  std::set<std::string> survivors;
  for (const auto& t : res.output) survivors.insert(t.trace_id);
  int identical = 1;
  for (int r = 1; r < 5; ++r) identical += pipeline_bytes(raw, reg, 1, nullptr) == first;
  const bool parallel_same = pipeline_bytes(raw, reg, 8, nullptr) == first;
  return {raw.size() == 60 && oracle_ids.size() == 20 && survivors == oracle_ids && identical == 5 && parallel_same,
          fmt("%zu traces in, %zu kept, oracle set matched=%d, byte-identical %d/5, workers 1 vs 8 %s", raw.size(),
              kept, survivors == oracle_ids ? 1 : 0, identical, parallel_same ? "same" : "differ")};
}

Outcome reflection() {
  const TaskRegistry reg = TaskRegistry::bundled();
  SimEnv env;
  auto noisy = make_policy("scripted:noisy-oracle:0.3");
  int pairs = 0, replayed = 0, post = 0, post_ok = 0;
  for (int i = 0; i < 200; ++i) {
    const Task& task = reg.tasks()[static_cast<std::size_t>(i) % reg.tasks().size()];
    const Trace t = run_episode(task, env, *noisy, {15, 5, static_cast<std::uint64_t>(1000 + i)});
    for (const Correction& c : scripted_corrections(t, env)) {
      const PreferencePair p = build_pair(t, c);
      ++pairs;
      // Independent replay of the prefix against recorded digests.
      SimEnv check;
      std::string digest = check.reset(task).digest;
      bool ok = true;
      for (const Step& s : p.prefix) {
        ok = ok && s.observation.digest == digest;
        digest = check.apply_action(s.action).digest;
      }
      ok = ok && p.current.digest == digest;
      try {
        verify_pair_prefix(p, env);
      } catch (const Error&) {
        ok = false;
      }
      if (ok) ++replayed;
      if (p.kind == CorrectionKind::PostReflection) {
        ++post;
        const auto e = static_cast<std::size_t>(c.step_index - 1);
        bool kept = p.prefix.size() == static_cast<std::size_t>(c.step_index) && p.prefix[e] == t.steps[e];
        for (std::size_t k = 0; kept && k < p.prefix.size(); ++k) kept = p.prefix[k] == t.steps[k];
        if (kept) ++post_ok;
      }
    }
  }
  return {pairs > 0 && post > 0 && replayed == pairs && post_ok == post,
          fmt("prefix replay %d/%d, post-reflection error retained %d/%d", replayed, pairs, post_ok, post)};
}

Outcome sft_mask() {
  const TaskRegistry reg = TaskRegistry::bundled();
  SimEnv env;
  std::mt19937_64 rng(31);
  std::vector<Trace> traces;
  std::vector<StepDesignation> designations;
  std::set<std::pair<std::string, int>> erroneous;
  for (int i = 0; i < 200; ++i) {
    const Task& task = reg.tasks()[static_cast<std::size_t>(i) % reg.tasks().size()];
    auto acts = testing::oracle_actions(env, task);
    const int e = static_cast<int>(rng() % (acts.size() - 1));
    const double off = 0.95 + 0.001 * static_cast<double>(i % 40);
    acts.insert(acts.begin() + e, Action::click({off, off}));
    Trace t = testing::scripted_trace(env, task, acts);
    t.metadata["variant"] = std::to_string(i);
    t.trace_id = io::compute_trace_id(t);
    traces.push_back(t);
    designations.push_back({t.trace_id, e, StepRole::Erroneous});
    designations.push_back({t.trace_id, e + 1, StepRole::Corrected});
    erroneous.insert({t.trace_id, e});
  }
  const auto samples = export_sft(traces, designations);
  std::size_t expected = 0;
  for (const auto& t : traces) expected += t.steps.size();
  long wrong = 0;
  for (const auto& s : samples) {
    if (s.loss_mask == (erroneous.count({s.trace_id, s.step_index}) > 0)) ++wrong;
  }
  return {samples.size() == expected && wrong == 0,
          fmt("%zu samples from 200 traces, %ld mask mismatches", samples.size(), wrong)};
}

Outcome bootstrap_improvement() {
  const auto t0 = Clock::now();
  const TaskRegistry reg = TaskRegistry::bundled();
  OrchestratorConfig cfg;
  cfg.seed = 0;
  IterationState s = initial_state(reg.tasks(), "scripted:noisy-oracle:0.4", cfg);
  std::vector<double> rates{s.metrics.success_rate};
  for (int r = 0; r < 3; ++r) {
    s = run_iteration(s, cfg);
    rates.push_back(s.metrics.success_rate);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rates.size(); ++i) monotone = monotone && rates[i] >= rates[i - 1];
  const double secs = seconds_since(t0);
  return {monotone && rates[3] >= rates[0] + 0.2 && secs < 120.0,
          fmt("held-out rates %.3f %.3f %.3f %.3f, %.1fs", rates[0], rates[1], rates[2], rates[3], secs)};
}

Outcome best_of_n_check() {
  const auto t0 = Clock::now();
  const TaskRegistry reg = TaskRegistry::bundled();
  // A homogeneous population: re-seeded layouts of one task.
  const auto tasks = variants(reg.get("form_feedback"), 1500, "b");
  auto policy = make_policy("scripted:noisy-oracle:0.8");
  BenchConfig cfg;
  cfg.runs = 1;
  std::vector<BonResult> results(tasks.size());
  parallel_for(tasks.size(), 2, [&](std::size_t i) { results[i] = best_of_n(tasks[i], *policy, 64, cfg); });
  double episodes = 0, bon1 = 0, bon16 = 0, bon64 = 0;
  for (const auto& r : results) {
    bool a1 = false, a16 = false, a64 = false;
    for (std::size_t j = 0; j < r.episodes.size(); ++j) {
      if (!r.episodes[j]) continue;
      episodes += 1;
      a1 = a1 || j < 1;
      a16 = a16 || j < 16;
      a64 = true;
    }
    bon1 += a1;
    bon16 += a16;
    bon64 += a64;
  }
  const double m = static_cast<double>(tasks.size());
  const double p = episodes / (64.0 * m);
  const double model = 1.0 - std::pow(1.0 - p, 16);
  bon1 /= m;
  bon16 /= m;
  bon64 /= m;

  // Same property through the suite-level entry point on the bundled tasks.
  auto noisy = make_policy("scripted:noisy-oracle:0.6");
  const double s1 = run_best_of_n(reg.tasks(), *noisy, 1, cfg).success_rate;
  const double s16 = run_best_of_n(reg.tasks(), *noisy, 16, cfg).success_rate;
  const double s64 = run_best_of_n(reg.tasks(), *noisy, 64, cfg).success_rate;

  const double secs = seconds_since(t0);
  const bool ok = bon1 <= bon16 && bon16 <= bon64 && s1 <= s16 && s16 <= s64 && std::abs(bon16 - model) <= 0.03 &&
                  secs < 120.0;
  return {ok, fmt("p=%.4f, BoN 1/16/64 = %.4f/%.4f/%.4f, model(16)=%.4f, suite %.2f/%.2f/%.2f, %.1fs", p, bon1, bon16,
                  bon64, model, s1, s16, s64, secs)};
}

Outcome evaluation_protocol() {
  const TaskRegistry reg = TaskRegistry::bundled();
  SimEnv env;
  BenchConfig cfg;
  cfg.runs = 3;
  const double at15 = run_benchmark(reg.tasks(), *make_policy("scripted:oracle"), cfg).success_rate;
  int tight_ok = 0;
  for (const Task& t : reg.tasks()) {
    BenchConfig tight = cfg;
    tight.budget = static_cast<int>(testing::oracle_actions(env, t).size());
    if (run_benchmark({t}, *make_policy("scripted:oracle"), tight).success_rate == 1.0) ++tight_ok;
  }
  OracleThenCallUser caller;
  const BenchReport cu = run_benchmark(reg.tasks(), caller, cfg);
  int goal_reached = 0;
  for (const Task& t : reg.tasks()) {
    const Trace tr = run_episode(t, env, caller, {15, 5, 0});
    if (tr.termination == Termination::CallUser && env.check_goal()) ++goal_reached;
  }
  const double plain_cu = run_benchmark(reg.tasks(), *make_policy("scripted:calluser"), cfg).success_rate;
  const int n = static_cast<int>(reg.tasks().size());
  return {at15 == 1.0 && tight_ok == n && cu.success_rate == 0.0 && plain_cu == 0.0 && goal_reached == n,
          fmt("oracle %.2f at budget 15, %d/%d at oracle length; CallUser rate %.2f (goal reached in %d/%d)", at15,
              tight_ok, n, cu.success_rate, goal_reached, n)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"action-grammar-round-trip", grammar},
      {"observation-windowing", windowing},
      {"dpo-math", dpo},
      {"bradley-terry", bradley_terry},
      {"filter-pipeline", filter},
      {"reflection-pairs", reflection},
      {"sft-mask", sft_mask},
      {"bootstrap-improvement", bootstrap_improvement},
      {"best-of-n", best_of_n_check},
      {"evaluation-protocol", evaluation_protocol},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.ok) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
