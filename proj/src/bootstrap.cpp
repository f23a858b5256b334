#include "guiagent/bootstrap.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "guiagent/policies.hpp"
#include "guiagent/sim_env.hpp"
#include "guiagent/trace_io.hpp"
#include "guiagent/trace_store.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

namespace fs = std::filesystem;
using nlohmann::json;

MemorizingPolicy::MemorizingPolicy(std::shared_ptr<const PolicyClient> base, std::map<std::string, MemoEntry> table)
    : base_(std::move(base)), table_(std::move(table)) {
  if (!base_) throw Error(ErrorCode::Precondition, "memorizing policy needs a base policy");
}

std::string MemorizingPolicy::key(const std::string& instruction, std::span<const Action> history,
                                  const std::string& digest) {
  std::uint64_t h = fnv1a64(instruction);
  for (const auto& a : history) h = fnv1a64(serialize_action(a) + "\x1f", h);
  return to_hex(fnv1a64(digest, h));
}

std::string MemorizingPolicy::respond(const PromptContext& ctx, std::uint64_t seed) const {
  std::vector<Action> history;
  history.reserve(ctx.history.size());
  for (const auto& h : ctx.history) history.push_back(h.action);
  auto it = table_.find(key(ctx.instruction, history, ctx.current().digest));
  if (it != table_.end()) {
    return format_policy_output("I have been on this screen before; repeating what worked.", it->second.action);
  }
  return base_->respond(ctx, seed);
}

std::string MemorizingPolicy::id() const {
  return "memo(" + base_->id() + "," + std::to_string(table_.size()) + ")";
}

std::shared_ptr<const PolicyClient> MemorizingLearner::learn(const std::shared_ptr<const PolicyClient>& current,
                                                             const std::vector<Trace>& filtered) const {
  std::shared_ptr<const PolicyClient> base = current;
  std::map<std::string, MemoEntry> table;
  if (auto memo = std::dynamic_pointer_cast<const MemorizingPolicy>(current)) {
    base = memo->base();
    table = memo->table();
  }
  for (const auto& t : filtered) {
    const int n = static_cast<int>(t.steps.size());
    std::vector<Action> history;
    for (int i = 0; i < n; ++i) {
      const auto& s = t.steps[static_cast<std::size_t>(i)];
      MemoEntry entry{s.action, n - i};
      auto [it, inserted] = table.emplace(MemorizingPolicy::key(t.instruction, history, s.observation.digest), entry);
      history.push_back(s.action);
      if (!inserted && entry.remaining < it->second.remaining) it->second = entry;
    }
  }
  return std::make_shared<MemorizingPolicy>(base, std::move(table));
}

std::vector<Task> VariantRefiner::refine(const std::vector<Task>& tasks, const std::map<std::string, double>& solved,
                                         int round, RefinerStats* stats) const {
  RefinerStats local;
  std::vector<Task> kept;
  std::vector<Task> variants;
  for (const auto& t : tasks) {
    auto it = solved.find(t.task_id);
    double rate = it == solved.end() ? 0.0 : it->second;
    if (rate >= quota_) {
      ++local.dropped;
      continue;
    }
    kept.push_back(t);
    if (t.task_id.find('~') == std::string::npos) {
      Task v = t;
      v.seed = derive_seed(t.seed, static_cast<std::uint64_t>(round));
      v.task_id = t.task_id + "~r" + std::to_string(round);
      variants.push_back(std::move(v));
      ++local.added;
    }
  }
  for (auto& v : variants) kept.push_back(std::move(v));
  if (kept.empty() && !tasks.empty()) {
    kept.push_back(tasks.front());
    --local.dropped;
  }
  if (stats) *stats = local;
  return kept;
}

std::vector<Task> heldout_split(const std::vector<Task>& tasks) {
  std::vector<Task> sorted = tasks;
  std::sort(sorted.begin(), sorted.end(), [](const Task& a, const Task& b) {
    auto ha = fnv1a64(a.task_id);
    auto hb = fnv1a64(b.task_id);
    return ha != hb ? ha < hb : a.task_id < b.task_id;
  });
  std::size_t n = std::max<std::size_t>(1, tasks.size() / 5);
  sorted.resize(std::min(n, sorted.size()));
  return sorted;
}

namespace {

BenchConfig eval_config(const OrchestratorConfig& cfg) {
  // Evaluation seeds are disjoint from the seeds used to collect traces.
  return {cfg.budget, cfg.window, cfg.eval_runs, derive_seed(cfg.seed, "heldout-eval"), cfg.workers};
}

}  // namespace

IterationState initial_state(const std::vector<Task>& tasks, const std::string& base_policy,
                             const OrchestratorConfig& cfg) {
  if (tasks.empty()) throw Error(ErrorCode::Precondition, "empty instruction set");
  IterationState s;
  s.round = 0;
  s.tasks = tasks;
  s.heldout = heldout_split(tasks);
  s.base_policy = base_policy;
  s.policy = make_policy(base_policy);
  s.policy_id = s.policy->id();
  s.metrics = run_benchmark(s.heldout, *s.policy, eval_config(cfg));
  s.history.push_back({0, s.policy_id, static_cast<int>(tasks.size()), 0, 0, s.metrics.success_rate});
  return s;
}

IterationState run_iteration(const IterationState& state, const OrchestratorConfig& cfg, const LearnerHook& learner,
                             const RefinerHook& refiner) {
  if (state.tasks.empty()) throw Error(ErrorCode::Precondition, "empty instruction set");
  if (cfg.workers < 1) throw Error(ErrorCode::Precondition, "workers must be >= 1");
  if (!state.policy) throw Error(ErrorCode::Precondition, "state without a policy");
  const int round = state.round;
  const std::vector<Task>& tasks = state.tasks;

  std::vector<Trace> raw(tasks.size());
  std::vector<char> success(tasks.size(), 0);
  parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
    const Task& task = tasks[i];
    SimEnv env(TaskRegistry({task}));
    EpisodeConfig ec{cfg.budget, cfg.window,
                     derive_seed(derive_seed(cfg.seed, task.task_id), static_cast<std::uint64_t>(round))};
    raw[i] = run_episode(task, env, *state.policy, ec);
    raw[i].metadata[std::string(meta::kRound)] = std::to_string(round);
    raw[i].trace_id = io::compute_trace_id(raw[i]);
    success[i] = episode_succeeded(raw[i], env) ? 1 : 0;
  });

  TaskRegistry registry(tasks);
  ReplayScorer scorer(registry);
  FilterConfig fc = cfg.filter;
  fc.workers = cfg.workers;
  auto result = run_pipeline(raw, registry, scorer, {}, fc);

  if (!cfg.store_dir.empty()) {
    TraceStore raw_store((fs::path(cfg.store_dir) / "raw").string());
    TraceStore filtered_store((fs::path(cfg.store_dir) / "filtered").string());
    for (const auto& t : raw) raw_store.save(t);
    for (const auto& t : result.output) filtered_store.save(t);
    auto report_path = fs::path(cfg.store_dir) / "reports" / ("round-" + std::to_string(round) + ".jsonl");
    std::ostringstream report;
    write_report(report, result.report);
    write_file_atomic(report_path.string(), report.str());
  }

  IterationState next;
  next.round = round + 1;
  next.heldout = state.heldout;
  next.base_policy = state.base_policy;
  next.policy = learner.learn(state.policy, result.output);
  next.policy_id = next.policy->id();
  next.raw_count = static_cast<int>(raw.size());
  next.filtered_count = static_cast<int>(result.output.size());

  std::map<std::string, double> solved;
  for (std::size_t i = 0; i < tasks.size(); ++i) solved[tasks[i].task_id] = success[i] ? 1.0 : 0.0;
  next.tasks = refiner.refine(tasks, solved, round, nullptr);
  if (next.tasks.empty()) throw Error(ErrorCode::Precondition, "refiner produced an empty instruction set");

  next.metrics = run_benchmark(next.heldout, *next.policy, eval_config(cfg));
  next.history = state.history;
  next.history.push_back({next.round, next.policy_id, static_cast<int>(tasks.size()), next.raw_count,
                          next.filtered_count, next.metrics.success_rate});
  return next;
}

namespace {

json tasks_json(const std::vector<Task>& tasks) {
  json a = json::array();
  for (const auto& t : tasks) a.push_back(io::task_to_json(t));
  return a;
}

std::vector<Task> tasks_from(const json& a) {
  std::vector<Task> out;
  for (const auto& t : a) out.push_back(io::task_from_json(t));
  return out;
}

}  // namespace

void write_checkpoint(const std::string& path, const IterationState& state) {
  json memory = json::object();
  if (auto memo = std::dynamic_pointer_cast<const MemorizingPolicy>(state.policy)) {
    for (const auto& [k, e] : memo->table()) memory[k] = {{"action", serialize_action(e.action)}, {"remaining", e.remaining}};
  }
  json history = json::array();
  for (const auto& h : state.history) {
    history.push_back({{"round", h.round},
                       {"policy_id", h.policy_id},
                       {"task_count", h.task_count},
                       {"raw_count", h.raw_count},
                       {"filtered_count", h.filtered_count},
                       {"heldout_rate", h.heldout_rate}});
  }
  json doc{{"format", "bootstrap-checkpoint"},
           {"version", 1},
           {"round", state.round},
           {"base_policy", state.base_policy},
           {"tasks", tasks_json(state.tasks)},
           {"heldout", tasks_json(state.heldout)},
           {"memory", std::move(memory)},
           {"raw_count", state.raw_count},
           {"filtered_count", state.filtered_count},
           {"metrics", bench_report_to_json(state.metrics)},
           {"history", std::move(history)}};
  write_file_atomic(path, doc.dump(2) + "\n");
}

IterationState resume(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptCheckpoint, e.what());
  }
  try {
    auto doc = json::parse(text);
    io::require_exact_keys(doc,
                           {"format", "version", "round", "base_policy", "tasks", "heldout", "memory", "raw_count",
                            "filtered_count", "metrics", "history"},
                           "checkpoint");
    if (doc["format"] != "bootstrap-checkpoint" || doc["version"] != 1) {
      throw Error(ErrorCode::CorruptCheckpoint, "not a version 1 bootstrap checkpoint");
    }
    IterationState s;
    s.round = doc["round"].get<int>();
    s.base_policy = doc["base_policy"].get<std::string>();
    s.tasks = tasks_from(doc["tasks"]);
    s.heldout = tasks_from(doc["heldout"]);
    s.raw_count = doc["raw_count"].get<int>();
    s.filtered_count = doc["filtered_count"].get<int>();
    s.metrics = bench_report_from_json(doc["metrics"]);
    if (s.tasks.empty() || s.round < 0 || s.filtered_count > s.raw_count) {
      throw Error(ErrorCode::CorruptCheckpoint, "inconsistent checkpoint state");
    }
    auto base = make_policy(s.base_policy);
    if (s.round == 0 && doc["memory"].empty()) {
      s.policy = base;
    } else {
      std::map<std::string, MemoEntry> table;
      for (const auto& [k, v] : doc["memory"].items()) {
        io::require_exact_keys(v, {"action", "remaining"}, "memory entry");
        // Entries were validated when learned; a kind is either desktop- or
        // mobile-only, so one of the two profiles accepts it.
        auto text_action = v["action"].get<std::string>();
        Action a;
        try {
          a = parse_action(text_action, PlatformProfile::desktop());
        } catch (const Error&) {
          a = parse_action(text_action, PlatformProfile::mobile());
        }
        table[k] = {a, v["remaining"].get<int>()};
      }
      s.policy = std::make_shared<MemorizingPolicy>(base, std::move(table));
    }
    s.policy_id = s.policy->id();
    for (const auto& h : doc["history"]) {
      io::require_exact_keys(h, {"round", "policy_id", "task_count", "raw_count", "filtered_count", "heldout_rate"},
                             "checkpoint history");
      s.history.push_back({h["round"].get<int>(), h["policy_id"].get<std::string>(), h["task_count"].get<int>(),
                           h["raw_count"].get<int>(), h["filtered_count"].get<int>(), h["heldout_rate"].get<double>()});
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("checkpoint: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptCheckpoint) throw;
    throw Error(ErrorCode::CorruptCheckpoint, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace guiagent
