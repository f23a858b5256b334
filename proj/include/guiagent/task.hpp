#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guiagent/action.hpp"

namespace guiagent {

struct Task {
  std::string task_id;
  std::string app;
  std::string instruction;
  std::map<std::string, std::string> params;
  std::uint64_t seed = 0;
  std::string goal;
  Platform platform = Platform::Desktop;
  // Upper bound on oracle episode length (including the final Finished()).
  int oracle_steps = 0;

  std::string param(std::string_view key, std::string_view fallback = {}) const;

  friend bool operator==(const Task&, const Task&) = default;
};

class TaskRegistry {
 public:
  TaskRegistry() = default;
  explicit TaskRegistry(std::vector<Task> tasks);

  // The ten-task suite shipped with the simulator.
  static TaskRegistry bundled();
  // Reads the structured-text registry file (see docs/formats.md).
  static TaskRegistry load(const std::string& path);
  void save(const std::string& path) const;

  void add(Task task);
  const Task& get(std::string_view task_id) const;  // throws UnknownTask
  const Task* find(std::string_view task_id) const noexcept;
  const std::vector<Task>& tasks() const noexcept { return tasks_; }

 private:
  std::vector<Task> tasks_;
};

}  // namespace guiagent
