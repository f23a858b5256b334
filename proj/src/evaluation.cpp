#include "guiagent/evaluation.hpp"

#include <algorithm>

#include "guiagent/sim_env.hpp"
#include "guiagent/trace_io.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

bool grounding_hit(const NormPoint& p, const NormBox& box) noexcept { return box.contains(p); }

StepJudgement action_match(const Action& pred, const Action& gold, const std::optional<NormBox>& gold_box) {
  StepJudgement j;
  j.type_match = pred.kind == gold.kind;
  if (!j.type_match) return j;
  auto point_ok = [&](const NormPoint& p, const NormPoint& g) {
    if (gold_box) {
      bool hit = grounding_hit(p, *gold_box);
      if (!j.grounding_hit) j.grounding_hit = hit;
      return hit;
    }
    return p == g;
  };
  switch (gold.kind) {
    case ActionKind::Type:
      j.args_match = pred.text == gold.text;
      break;
    case ActionKind::Hotkey:
      j.args_match = pred.text == gold.text;
      break;
    case ActionKind::Scroll:
      j.args_match = pred.direction == gold.direction && point_ok(pred.start, gold.start);
      break;
    case ActionKind::Drag:
      j.args_match = point_ok(pred.start, gold.start) && pred.end == gold.end;
      break;
    default:
      j.args_match = point_count(gold.kind) == 0 || point_ok(pred.start, gold.start);
      break;
  }
  return j;
}

std::vector<GoldStep> gold_steps(const Trace& gold) {
  std::vector<GoldStep> out;
  out.reserve(gold.steps.size());
  for (const auto& s : gold.steps) {
    GoldStep g{s.action, std::nullopt};
    if (point_count(s.action.kind) > 0) {
      if (const Element* e = s.observation.hit_test(s.action.start)) g.box = e->box;
    }
    out.push_back(std::move(g));
  }
  return out;
}

double step_success_rate(const std::vector<Action>& pred, const std::vector<GoldStep>& gold) {
  std::size_t n = std::max(pred.size(), gold.size());
  if (n == 0) return 1.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < std::min(pred.size(), gold.size()); ++i) {
    if (action_match(pred[i], gold[i].action, gold[i].box).correct()) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double step_success_rate(const Trace& pred, const Trace& gold) {
  std::vector<Action> actions;
  for (const auto& s : pred.steps) actions.push_back(s.action);
  return step_success_rate(actions, gold_steps(gold));
}

std::uint64_t run_seed(std::uint64_t seed, const std::string& task_id, int run) noexcept {
  return derive_seed(derive_seed(seed, task_id), static_cast<std::uint64_t>(run));
}

namespace {

struct EpisodeOutcome {
  bool success = false;
  std::string trace_id;
};

EpisodeOutcome run_one(const Task& task, const PolicyClient& policy, const BenchConfig& cfg, std::uint64_t seed) {
  SimEnv env(TaskRegistry({task}));
  EpisodeConfig ec{cfg.budget, cfg.window, seed};
  Trace t = run_episode(task, env, policy, ec);
  return {episode_succeeded(t, env), t.trace_id};
}

double mean_success(const std::vector<TaskResult>& tasks) {
  std::size_t total = 0;
  std::size_t wins = 0;
  for (const auto& t : tasks) {
    for (bool s : t.success) {
      ++total;
      if (s) ++wins;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(total);
}

}  // namespace

BenchReport run_benchmark(const std::vector<Task>& tasks, const PolicyClient& policy, const BenchConfig& cfg) {
  if (cfg.runs < 1) throw Error(ErrorCode::Precondition, "runs must be >= 1");
  const auto runs = static_cast<std::size_t>(cfg.runs);
  std::vector<EpisodeOutcome> outcomes(tasks.size() * runs);
  parallel_for(outcomes.size(), cfg.workers, [&](std::size_t i) {
    const Task& task = tasks[i / runs];
    outcomes[i] = run_one(task, policy, cfg, run_seed(cfg.seed, task.task_id, static_cast<int>(i % runs)));
  });
  BenchReport report;
  report.runs = cfg.runs;
  report.budget = cfg.budget;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    TaskResult r{tasks[t].task_id, {}, {}};
    for (std::size_t k = 0; k < runs; ++k) {
      r.success.push_back(outcomes[t * runs + k].success);
      r.trace_ids.push_back(outcomes[t * runs + k].trace_id);
    }
    report.tasks.push_back(std::move(r));
  }
  report.success_rate = mean_success(report.tasks);
  return report;
}

BonResult best_of_n(const Task& task, const PolicyClient& policy, int n, const BenchConfig& cfg) {
  if (n < 1) throw Error(ErrorCode::Precondition, "N must be >= 1");
  BonResult r;
  r.episodes.resize(static_cast<std::size_t>(n));
  std::vector<char> wins(static_cast<std::size_t>(n), 0);
  parallel_for(wins.size(), cfg.workers, [&](std::size_t j) {
    wins[j] = run_one(task, policy, cfg, run_seed(cfg.seed, task.task_id, static_cast<int>(j))).success ? 1 : 0;
  });
  for (std::size_t j = 0; j < wins.size(); ++j) {
    r.episodes[j] = wins[j] != 0;
    r.success = r.success || r.episodes[j];
  }
  return r;
}

BenchReport run_best_of_n(const std::vector<Task>& tasks, const PolicyClient& policy, int n, const BenchConfig& cfg) {
  BenchReport report;
  report.runs = 1;
  report.budget = cfg.budget;
  report.n_bon = n;
  for (const auto& task : tasks) {
    auto r = best_of_n(task, policy, n, cfg);
    report.tasks.push_back({task.task_id, {r.success}, {}});
  }
  report.success_rate = mean_success(report.tasks);
  return report;
}

nlohmann::json bench_report_to_json(const BenchReport& r) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : r.tasks) {
    tasks.push_back({{"task_id", t.task_id}, {"success", t.success}, {"trace_ids", t.trace_ids}});
  }
  return {{"format", "bench-report"},
          {"version", 1},
          {"success_rate", r.success_rate},
          {"runs", r.runs},
          {"budget", r.budget},
          {"n_bon", r.n_bon ? nlohmann::json(*r.n_bon) : nlohmann::json(nullptr)},
          {"tasks", std::move(tasks)}};
}

BenchReport bench_report_from_json(const nlohmann::json& j) {
  io::require_exact_keys(j, {"format", "version", "success_rate", "runs", "budget", "n_bon", "tasks"}, "bench report");
  if (j["format"] != "bench-report") throw Error(ErrorCode::CorruptRecord, "not a bench report");
  if (j["version"] != 1) throw Error(ErrorCode::SchemaVersionMismatch, "unsupported bench report version");
  BenchReport r;
  try {
    r.success_rate = j["success_rate"].get<double>();
    r.runs = j["runs"].get<int>();
    r.budget = j["budget"].get<int>();
    if (!j["n_bon"].is_null()) r.n_bon = j["n_bon"].get<int>();
    for (const auto& t : j["tasks"]) {
      io::require_exact_keys(t, {"task_id", "success", "trace_ids"}, "bench task");
      r.tasks.push_back({t["task_id"].get<std::string>(), t["success"].get<std::vector<bool>>(),
                         t["trace_ids"].get<std::vector<std::string>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("bench report: ") + e.what());
  }
  return r;
}

}  // namespace guiagent
