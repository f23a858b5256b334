#pragma once

#include <span>
#include <string>
#include <vector>

#include "guiagent/sim_env.hpp"
#include "guiagent/trace.hpp"

namespace guiagent {

// The task a trace was recorded on, looked up by its task_id metadata.
// Throws UnknownTask, or ReplayMismatch when the stored task seed differs.
const Task& task_for_trace(const Trace& t, const TaskRegistry& registry);

// Resets `env` to `task` and applies the non-terminal actions of `steps`,
// checking each step's recorded observation digest on the way. Returns the
// digests seen: one per step plus the state after the last applied action.
// Throws ReplayMismatch on the first disagreement.
std::vector<std::string> replay_steps(SimEnv& env, const Task& task, std::span<const Step> steps);

// Convenience: full-trace replay against the env's registry.
std::vector<std::string> replay_trace(SimEnv& env, const Trace& t);

// Non-throwing variant for display purposes.
bool replay_verifies(SimEnv& env, const Trace& t) noexcept;

}  // namespace guiagent
