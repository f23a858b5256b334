#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "guiagent/evaluation.hpp"
#include "guiagent/filter_pipeline.hpp"

namespace guiagent {

struct MemoEntry {
  Action action;
  int remaining = 0;  // steps from this state to the end of the source trace
  friend bool operator==(const MemoEntry&, const MemoEntry&) = default;
};

// Answers from a table keyed by (instruction, actions taken so far, current
// observation digest) and defers to the base policy elsewhere. The action
// history is part of the key because screens can look identical while
// off-screen progress differs.
class MemorizingPolicy final : public PolicyClient {
 public:
  MemorizingPolicy(std::shared_ptr<const PolicyClient> base, std::map<std::string, MemoEntry> table);

  std::string respond(const PromptContext& ctx, std::uint64_t seed) const override;
  std::string id() const override;

  static std::string key(const std::string& instruction, std::span<const Action> history, const std::string& digest);
  const std::map<std::string, MemoEntry>& table() const noexcept { return table_; }
  const std::shared_ptr<const PolicyClient>& base() const noexcept { return base_; }

 private:
  std::shared_ptr<const PolicyClient> base_;
  std::map<std::string, MemoEntry> table_;
};

class LearnerHook {
 public:
  virtual ~LearnerHook() = default;
  virtual std::shared_ptr<const PolicyClient> learn(const std::shared_ptr<const PolicyClient>& current,
                                                    const std::vector<Trace>& filtered) const = 0;
};

// Records every step of the filtered traces. When two traces share a key,
// the entry with fewer remaining steps wins.
class MemorizingLearner final : public LearnerHook {
 public:
  std::shared_ptr<const PolicyClient> learn(const std::shared_ptr<const PolicyClient>& current,
                                            const std::vector<Trace>& filtered) const override;
};

struct RefinerStats {
  int dropped = 0;
  int added = 0;
};

class RefinerHook {
 public:
  virtual ~RefinerHook() = default;
  // `solved` maps task_id to the fraction of this round's runs that
  // succeeded.
  virtual std::vector<Task> refine(const std::vector<Task>& tasks, const std::map<std::string, double>& solved,
                                   int round, RefinerStats* stats) const = 0;
};

// Drops tasks solved in at least `quota` of their runs and adds one
// re-seeded variant of each unsolved bundled task. Never returns an empty set.
class VariantRefiner final : public RefinerHook {
 public:
  explicit VariantRefiner(double quota = 1.0) : quota_(quota) {}
  std::vector<Task> refine(const std::vector<Task>& tasks, const std::map<std::string, double>& solved, int round,
                           RefinerStats* stats) const override;

 private:
  double quota_;
};

struct RoundRecord {
  int round = 0;
  std::string policy_id;
  int task_count = 0;
  int raw_count = 0;
  int filtered_count = 0;
  double heldout_rate = 0.0;
};

struct IterationState {
  int round = 0;
  std::vector<Task> tasks;       // instruction set of this round
  std::vector<Task> heldout;     // fixed evaluation subset
  std::string base_policy;       // policy spec the learner wraps
  std::shared_ptr<const PolicyClient> policy;
  std::string policy_id;
  int raw_count = 0;
  int filtered_count = 0;
  BenchReport metrics;           // held-out report of `policy`
  std::vector<RoundRecord> history;
};

struct OrchestratorConfig {
  std::size_t workers = 1;
  int budget = kDefaultBudget;
  int window = kDefaultWindow;
  std::uint64_t seed = 0;
  int eval_runs = 8;
  FilterConfig filter;
  std::string store_dir;  // empty: keep traces in memory only
};

// Held-out subset: the 20% of tasks with the smallest id hashes (at least one).
std::vector<Task> heldout_split(const std::vector<Task>& tasks);

// Round 0: no traces yet, held-out metrics of the base policy.
IterationState initial_state(const std::vector<Task>& tasks, const std::string& base_policy,
                             const OrchestratorConfig& cfg);

// Runs every task of state.tasks once, filters, learns, refines, and
// measures the new policy on the held-out tasks.
IterationState run_iteration(const IterationState& state, const OrchestratorConfig& cfg,
                             const LearnerHook& learner = MemorizingLearner(),
                             const RefinerHook& refiner = VariantRefiner());

void write_checkpoint(const std::string& path, const IterationState& state);
// Throws CorruptCheckpoint on a missing or malformed file.
IterationState resume(const std::string& path);

}  // namespace guiagent
