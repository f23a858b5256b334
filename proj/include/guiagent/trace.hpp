#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guiagent/action.hpp"
#include "guiagent/observation.hpp"

namespace guiagent {

// `Truncated` marks a trace cut back to its valid prefix by review.
enum class Termination { Finished, CallUser, BudgetExhausted, EnvError, Truncated };

std::string_view to_string(Termination t) noexcept;
Termination termination_from_string(std::string_view s);

struct Step {
  int index = 0;
  Observation observation;
  std::optional<std::string> thought;
  Action action;
  std::string raw;  // policy output exactly as received

  friend bool operator==(const Step&, const Step&) = default;
};

// Metadata keys written by the runtime.
namespace meta {
inline constexpr std::string_view kTaskId = "task_id";
inline constexpr std::string_view kTaskSeed = "task_seed";
inline constexpr std::string_view kEpisodeSeed = "episode_seed";
inline constexpr std::string_view kApp = "app";
inline constexpr std::string_view kPolicy = "policy";
inline constexpr std::string_view kBudget = "budget";
inline constexpr std::string_view kWindow = "window";
inline constexpr std::string_view kRound = "round";
inline constexpr std::string_view kDerivedFrom = "derived_from";
}  // namespace meta

struct Trace {
  std::string trace_id;
  std::string instruction;
  Platform platform = Platform::Desktop;
  std::vector<Step> steps;
  Termination termination = Termination::BudgetExhausted;
  std::map<std::string, std::string> metadata;

  std::string meta_value(std::string_view key, std::string_view fallback = {}) const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Throws CorruptRecord when the termination disagrees with the last action
// or step indices are not 0, 1, 2, ...
void validate_trace(const Trace& t);

}  // namespace guiagent
