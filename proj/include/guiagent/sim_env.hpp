#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guiagent/environment.hpp"

namespace guiagent {

namespace detail {
class App;
}

// Deterministic symbolic GUI simulator. Bundled apps are finite state
// machines ("form", "settings", "files", "browser"); a click is hit-tested
// against element boxes with the last element topmost.
class SimEnv final : public Environment {
 public:
  explicit SimEnv(TaskRegistry registry = TaskRegistry::bundled());
  ~SimEnv() override;
  SimEnv(SimEnv&&) noexcept;
  SimEnv& operator=(SimEnv&&) noexcept;

  Observation reset(const Task& task) override;
  Observation reset(std::string_view task_id);  // registry lookup
  Observation apply_action(const Action& action) override;
  const Observation& observation() const override;
  bool check_goal() const override;
  OracleStep oracle_action() const override;

  // Oracle steps still needed from the current state (excluding Finished()),
  // or nullopt when the goal is unreachable by the oracle.
  std::optional<int> remaining_oracle_steps() const;

  const Task& task() const;
  const TaskRegistry& registry() const noexcept { return registry_; }
  int actions_applied() const noexcept { return actions_applied_; }

 private:
  void require_reset() const;
  void refresh_observation();

  TaskRegistry registry_;
  std::optional<Task> task_;
  std::unique_ptr<detail::App> app_;
  std::unique_ptr<detail::App> previous_app_;
  std::string previous_screen_;
  Observation observation_;
  int actions_applied_ = 0;
};

// Names of the apps the simulator can host.
std::vector<std::string> bundled_apps();

}  // namespace guiagent
