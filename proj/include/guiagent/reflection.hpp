#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "guiagent/agent_loop.hpp"
#include "guiagent/sim_env.hpp"

namespace guiagent {

enum class CorrectionKind { ErrorCorrection, PostReflection };

std::string_view to_string(CorrectionKind k) noexcept;
CorrectionKind correction_kind_from_string(std::string_view s);

// A replacement (thought, action) for one step of a stored trace. For
// post-reflection, step_index is the step right after the uncorrected error.
struct Correction {
  std::string trace_id;
  int step_index = 0;
  std::string thought;
  Action action;
  CorrectionKind kind = CorrectionKind::ErrorCorrection;

  friend bool operator==(const Correction&, const Correction&) = default;
};

nlohmann::json correction_to_json(const Correction& c);
// `platform` decides which action kinds the action text may use.
Correction correction_from_json(const nlohmann::json& j, Platform platform);

struct Branch {
  std::optional<std::string> thought;
  Action action;
  friend bool operator==(const Branch&, const Branch&) = default;
};

struct PreferencePair {
  std::string trace_id;
  std::string task_id;
  CorrectionKind kind = CorrectionKind::ErrorCorrection;
  int step_index = 0;  // divergence step
  std::string instruction;
  Platform platform = Platform::Desktop;
  std::vector<Step> prefix;  // steps strictly before the divergence step
  Observation current;       // observation at the divergence step
  Branch rejected;
  Branch chosen;
};

// Shared by the builders and the review service. Throws IndexOutOfBounds,
// Precondition (trace or kind mismatch), IdenticalPair, or the action
// validation errors for the trace's platform.
void validate_correction(const Trace& t, const Correction& c);

PreferencePair build_error_correction_pair(const Trace& t, const Correction& c);
PreferencePair build_post_reflection_pair(const Trace& t, const Correction& c);
// Dispatches on c.kind.
PreferencePair build_pair(const Trace& t, const Correction& c);

// Replays the pair's prefix and checks every recorded digest, including
// the divergence observation. Throws ReplayMismatch.
void verify_pair_prefix(const PreferencePair& p, SimEnv& env);

// Uses the simulator oracle to find the first step whose action departs
// from the oracle's, and proposes an error-correction at that step plus a
// post-reflection at the next one when the trace continues past it.
std::vector<Correction> scripted_corrections(const Trace& t, SimEnv& env);

struct DpoRecord {
  std::string trace_id;
  CorrectionKind kind = CorrectionKind::ErrorCorrection;
  int step_index = 0;
  nlohmann::json context;
  Branch chosen;
  Branch rejected;
};

DpoRecord to_dpo_record(const PreferencePair& p, int window = kDefaultWindow);

// Header line {"format":"dpo-pairs","version":1,"count":n}, then one record
// per line.
void emit_dpo_dataset(std::ostream& out, const std::vector<PreferencePair>& pairs, int window = kDefaultWindow);
std::vector<DpoRecord> read_dpo_dataset(std::istream& in);

// Correction lines of an annotation file; other line types are skipped.
// `platform_of` maps a trace id to the platform its action text is parsed for.
std::vector<Correction> read_corrections(std::istream& in,
                                         const std::function<Platform(const std::string&)>& platform_of);

}  // namespace guiagent
