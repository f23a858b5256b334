#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guiagent/environment.hpp"
#include "guiagent/trace.hpp"

namespace guiagent {

inline constexpr int kDefaultWindow = 5;
inline constexpr int kDefaultBudget = 15;
inline constexpr int kExtendedBudget = 50;

struct HistoryEntry {
  std::optional<std::string> thought;
  Action action;
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct WindowedObservation {
  int step_index = 0;
  Observation observation;
  friend bool operator==(const WindowedObservation&, const WindowedObservation&) = default;
};

// What the policy sees at one step: every earlier (thought, action) pair but
// only the most recent observations, ending with the current one.
struct PromptContext {
  std::string instruction;
  Platform platform = Platform::Desktop;
  std::vector<HistoryEntry> history;
  std::vector<WindowedObservation> observations;  // last element is current
  int window = kDefaultWindow;

  // Privileged handle for scripted policies that consult the simulator's
  // oracle. Never serialized; null for contexts rebuilt from documents.
  const Environment* env = nullptr;

  const Observation& current() const { return observations.back().observation; }
};

// Keeps all (thought, action) pairs and at most `window` observations: the
// last window-1 prior ones plus `current`. Throws Precondition if window < 1.
PromptContext window_context(std::string instruction, std::span<const Step> history,
                             const Observation& current, int window);

struct PolicyOutput {
  std::optional<std::string> thought;
  std::string action_line;
};

// Splits "Thought: ...\nAction: ..." output. Throws MissingAction.
PolicyOutput parse_policy_output(std::string_view text);

// A model endpoint or scripted policy. Implementations must be safe to call
// concurrently; all randomness comes from `seed`.
class PolicyClient {
 public:
  virtual ~PolicyClient() = default;

  virtual std::string respond(const PromptContext& ctx, std::uint64_t seed) const = 0;
  // k independent samples; sample i uses derive_seed(seed, i).
  virtual std::vector<std::string> sample(const PromptContext& ctx, int k, std::uint64_t seed) const;
  virtual std::string id() const = 0;
};

struct EpisodeConfig {
  int budget = kDefaultBudget;
  int window = kDefaultWindow;
  std::uint64_t seed = 0;
};

// observe -> window -> policy -> parse -> validate -> act, until Finished,
// CallUser, an environment error, or the step budget. Output that fails to
// parse or validate is recorded verbatim with Wait() executed in its place.
Trace run_episode(const Task& task, Environment& env, const PolicyClient& policy,
                  const EpisodeConfig& config);

// Finished with the goal reached; CallUser and budget exhaustion count as
// infeasible, i.e. failures.
bool episode_succeeded(const Trace& trace, const Environment& env);

}  // namespace guiagent
