#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "guiagent/agent_loop.hpp"

namespace guiagent {

enum class StepRole { Corrected, Erroneous };

std::string_view to_string(StepRole r) noexcept;
StepRole step_role_from_string(std::string_view s);

// Marks one step of a stored trace as a correction target or as an error
// that stays in the trace only as context.
struct StepDesignation {
  std::string trace_id;
  int step_index = 0;
  StepRole role = StepRole::Corrected;
};

struct SftSample {
  std::string trace_id;
  int step_index = 0;
  nlohmann::json context;  // PromptContext document
  std::optional<std::string> target_thought;
  Action target_action;
  bool loss_mask = true;
};

struct SftConfig {
  int window = kDefaultWindow;
  // Also emit a thought-free copy of every step that has a thought.
  bool include_vanilla = false;
};

// One sample per step. Masks are false exactly on steps designated
// erroneous. Throws DanglingCorrection for designations that name a missing
// trace or step.
std::vector<SftSample> export_sft(const std::vector<Trace>& traces, const std::vector<StepDesignation>& designations,
                                  const SftConfig& cfg = {});

nlohmann::json sft_sample_to_json(const SftSample& s);
void write_sft_jsonl(std::ostream& out, const std::vector<SftSample>& samples);

// Reads {"trace_id", "step_index", "role"} lines; blank lines are skipped.
std::vector<StepDesignation> read_designations(std::istream& in);

}  // namespace guiagent
