#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "guiagent/sim_env.hpp"
#include "guiagent/trace.hpp"

namespace guiagent {

enum class FilterStage { Rule, Score, Review };
enum class FilterDecision { Keep, Drop, Truncate };

std::string_view to_string(FilterStage s) noexcept;
std::string_view to_string(FilterDecision d) noexcept;
FilterDecision filter_decision_from_string(std::string_view s);

struct FilterVerdict {
  FilterStage stage = FilterStage::Rule;
  FilterDecision decision = FilterDecision::Keep;
  std::optional<int> truncate_at;
  std::string reason;
  std::optional<double> score;

  friend bool operator==(const FilterVerdict&, const FilterVerdict&) = default;
};

class ScorerClient {
 public:
  virtual ~ScorerClient() = default;
  // Score in [0, 1]. Throws ScorerFailure.
  virtual double score(const std::string& instruction, const Trace& trace) const = 0;
  virtual std::string id() const = 0;
};

// Replays the trace in the simulator: 1.0 when it ends in Finished() with
// the goal reached, 0.2 otherwise.
class ReplayScorer final : public ScorerClient {
 public:
  explicit ReplayScorer(TaskRegistry registry);
  double score(const std::string& instruction, const Trace& trace) const override;
  std::string id() const override { return "scripted"; }

 private:
  TaskRegistry registry_;
};

struct ReviewAnnotation {
  std::string trace_id;
  int error_step = 0;
  FilterDecision verdict = FilterDecision::Keep;
  std::string annotator;
  std::string note;

  friend bool operator==(const ReviewAnnotation&, const ReviewAnnotation&) = default;
};

nlohmann::json review_annotation_to_json(const ReviewAnnotation& a);
ReviewAnnotation review_annotation_from_json(const nlohmann::json& j);

struct FilterConfig {
  int repeat_limit = 3;   // R: identical no-effect actions in a row
  int stuck_window = 3;   // K: equal final digests on budget exhaustion
  double threshold = 0.5;
  double review_fraction = 1.0;
  std::size_t workers = 1;
};

// Replays the trace (ReplayMismatch on disagreement) and drops redundant
// repeats or stuck loops.
FilterVerdict rule_filter(const Trace& t, SimEnv& env, const FilterConfig& cfg = {});

// Keeps iff score >= threshold. Scorer errors surface as ScorerFailure.
FilterVerdict score_filter(const Trace& t, const ScorerClient& scorer, double threshold);

// Truncation keeps steps [0, error_step) and marks the trace truncated;
// an empty prefix means drop (nullopt). Throws IndexOutOfBounds.
std::optional<Trace> apply_review(const Trace& t, const ReviewAnnotation& ann);

// Deterministic sampling of traces for human review.
bool selected_for_review(const std::string& trace_id, double review_fraction) noexcept;

struct VerdictChain {
  std::string trace_id;
  std::vector<FilterVerdict> verdicts;
  std::optional<std::string> output_id;
  std::optional<std::string> error;
};

struct PipelineResult {
  std::vector<Trace> output;
  std::vector<VerdictChain> report;
};

// rule -> score -> review per trace, in parallel; results keep input order.
// A trace dropped at one stage skips the rest. A stage error becomes a drop
// with the error recorded and does not stop the batch.
PipelineResult run_pipeline(const std::vector<Trace>& raw, const TaskRegistry& registry, const ScorerClient& scorer,
                            const std::map<std::string, ReviewAnnotation>& annotations, const FilterConfig& cfg = {});

nlohmann::json verdict_chain_to_json(const VerdictChain& c);
// One chain per line.
void write_report(std::ostream& out, const std::vector<VerdictChain>& report);

}  // namespace guiagent
