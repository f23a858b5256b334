#pragma once

#include <optional>
#include <string>

#include "guiagent/action.hpp"
#include "guiagent/observation.hpp"
#include "guiagent/reasoning.hpp"
#include "guiagent/task.hpp"

namespace guiagent {

// Next step of a scripted expert, with a templated thought.
struct OracleStep {
  std::string thought;
  ReasoningPattern pattern = ReasoningPattern::LongTermConsistency;
  Action action;
  // Box of the element the action targets, when it targets one.
  std::optional<NormBox> target_box;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual Observation reset(const Task& task) = 0;
  virtual Observation apply_action(const Action& action) = 0;
  virtual const Observation& observation() const = 0;
  virtual bool check_goal() const = 0;
  // Throws NoOracle when no scripted solution exists and Precondition when
  // the goal is already reached.
  virtual OracleStep oracle_action() const = 0;
};

}  // namespace guiagent
