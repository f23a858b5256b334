#include "guiagent/replay.hpp"

namespace guiagent {

const Task& task_for_trace(const Trace& t, const TaskRegistry& registry) {
  auto id = t.meta_value(meta::kTaskId);
  if (id.empty()) throw Error(ErrorCode::UnknownTask, "trace " + t.trace_id + " has no task_id");
  const Task& task = registry.get(id);
  auto seed = t.meta_value(meta::kTaskSeed);
  if (!seed.empty() && seed != std::to_string(task.seed)) {
    throw Error(ErrorCode::ReplayMismatch,
                "trace " + t.trace_id + " was recorded with task seed " + seed + ", registry has " +
                    std::to_string(task.seed));
  }
  return task;
}

std::vector<std::string> replay_steps(SimEnv& env, const Task& task, std::span<const Step> steps) {
  std::vector<std::string> digests;
  digests.reserve(steps.size() + 1);
  Observation obs = env.reset(task);
  for (const auto& step : steps) {
    if (obs.digest != step.observation.digest) {
      throw Error(ErrorCode::ReplayMismatch, "step " + std::to_string(step.index) + ": recorded digest " +
                                                 step.observation.digest + ", replay gives " + obs.digest);
    }
    digests.push_back(obs.digest);
    if (is_terminal(step.action.kind)) return digests;
    obs = env.apply_action(step.action);
  }
  digests.push_back(obs.digest);
  return digests;
}

std::vector<std::string> replay_trace(SimEnv& env, const Trace& t) {
  return replay_steps(env, task_for_trace(t, env.registry()), t.steps);
}

bool replay_verifies(SimEnv& env, const Trace& t) noexcept {
  try {
    replay_trace(env, t);
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace guiagent
