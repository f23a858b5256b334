#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "guiagent/agent_loop.hpp"
#include "guiagent/task.hpp"

namespace guiagent {

// Closed box: points on the edge count as hits.
bool grounding_hit(const NormPoint& p, const NormBox& box) noexcept;

struct StepJudgement {
  bool type_match = false;
  bool args_match = false;
  std::optional<bool> grounding_hit;

  bool correct() const noexcept { return type_match && args_match; }
};

// Kind must match, then arguments: exact Type text, canonical Hotkey key,
// Scroll direction, and coordinates by gold-box membership when a box is
// given (4-decimal equality otherwise).
StepJudgement action_match(const Action& pred, const Action& gold, const std::optional<NormBox>& gold_box);

struct GoldStep {
  Action action;
  std::optional<NormBox> box;
};

// Gold steps of a recorded trace, with the box of the element under each
// coordinate action's first point.
std::vector<GoldStep> gold_steps(const Trace& gold);

// Teacher-forced: step i of `pred` is judged against gold step i. Missing or
// surplus steps count as incorrect. Two empty traces score 1.
double step_success_rate(const std::vector<Action>& pred, const std::vector<GoldStep>& gold);
double step_success_rate(const Trace& pred, const Trace& gold);

struct TaskResult {
  std::string task_id;
  std::vector<bool> success;  // one per run
  std::vector<std::string> trace_ids;
};

struct BenchReport {
  std::vector<TaskResult> tasks;
  double success_rate = 0.0;
  int runs = 1;
  int budget = kDefaultBudget;
  std::optional<int> n_bon;
};

struct BenchConfig {
  int budget = kDefaultBudget;
  int window = kDefaultWindow;
  int runs = 3;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Episode seed of a task run; shared by run_benchmark and best_of_n.
std::uint64_t run_seed(std::uint64_t seed, const std::string& task_id, int run) noexcept;

// Every task x run on a fresh simulator. Success needs Finished() with the
// goal reached; CallUser, budget exhaustion and env errors are failures.
// Keeps the task's layout seed and varies the episode seed per run.
BenchReport run_benchmark(const std::vector<Task>& tasks, const PolicyClient& policy, const BenchConfig& cfg);

struct BonResult {
  bool success = false;
  std::vector<bool> episodes;  // N entries
};

// N episodes with seeds run_seed(seed, task_id, j), j < N; a smaller N uses
// a prefix of a larger N's seeds. Success iff any episode succeeds.
BonResult best_of_n(const Task& task, const PolicyClient& policy, int n, const BenchConfig& cfg);

// Best-of-N over a task list; success_rate is the fraction of tasks solved.
BenchReport run_best_of_n(const std::vector<Task>& tasks, const PolicyClient& policy, int n, const BenchConfig& cfg);

nlohmann::json bench_report_to_json(const BenchReport& r);
BenchReport bench_report_from_json(const nlohmann::json& j);

}  // namespace guiagent
