#include "guiagent/filter_pipeline.hpp"

#include <ostream>

#include "guiagent/agent_loop.hpp"
#include "guiagent/replay.hpp"
#include "guiagent/trace_io.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

std::string_view to_string(FilterStage s) noexcept {
  switch (s) {
    case FilterStage::Rule: return "rule";
    case FilterStage::Score: return "score";
    case FilterStage::Review: return "review";
  }
  return "rule";
}

std::string_view to_string(FilterDecision d) noexcept {
  switch (d) {
    case FilterDecision::Keep: return "keep";
    case FilterDecision::Drop: return "drop";
    case FilterDecision::Truncate: return "truncate";
  }
  return "keep";
}

FilterDecision filter_decision_from_string(std::string_view s) {
  if (s == "keep") return FilterDecision::Keep;
  if (s == "drop") return FilterDecision::Drop;
  if (s == "truncate") return FilterDecision::Truncate;
  throw Error(ErrorCode::CorruptRecord, "unknown verdict '" + std::string(s) + "'");
}

ReplayScorer::ReplayScorer(TaskRegistry registry) : registry_(std::move(registry)) {}

double ReplayScorer::score(const std::string&, const Trace& trace) const {
  try {
    SimEnv env(registry_);
    replay_trace(env, trace);
    return trace.termination == Termination::Finished && env.check_goal() ? 1.0 : 0.2;
  } catch (const Error& e) {
    throw Error(ErrorCode::ScorerFailure, std::string("replay scorer: ") + e.what());
  }
}

nlohmann::json review_annotation_to_json(const ReviewAnnotation& a) {
  return {{"type", "review"},
          {"trace_id", a.trace_id},
          {"error_step", a.error_step},
          {"verdict", std::string(to_string(a.verdict))},
          {"annotator", a.annotator},
          {"note", a.note}};
}

ReviewAnnotation review_annotation_from_json(const nlohmann::json& j) {
  if (j.is_object() && j.contains("annotation_id")) {
    auto copy = j;
    copy.erase("annotation_id");
    return review_annotation_from_json(copy);
  }
  io::require_exact_keys(j, {"type", "trace_id", "error_step", "verdict", "annotator", "note"}, "review annotation");
  if (j["type"] != "review") throw Error(ErrorCode::CorruptRecord, "review annotation: type must be 'review'");
  try {
    return {j["trace_id"].get<std::string>(), j["error_step"].get<int>(),
            filter_decision_from_string(j["verdict"].get<std::string>()), j["annotator"].get<std::string>(),
            j["note"].get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("review annotation: ") + e.what());
  }
}

FilterVerdict rule_filter(const Trace& t, SimEnv& env, const FilterConfig& cfg) {
  // digests[i] is the state before step i; digests.back() the final state.
  auto digests = replay_trace(env, t);
  FilterVerdict v{FilterStage::Rule, FilterDecision::Keep, std::nullopt, "ok", std::nullopt};

  int run = 0;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (is_terminal(t.steps[i].action.kind) || i + 1 >= digests.size()) break;
    bool no_effect = digests[i + 1] == digests[i];
    if (!no_effect) {
      run = 0;
    } else if (run > 0 && t.steps[i].action == t.steps[i - 1].action) {
      ++run;
    } else {
      run = 1;
    }
    if (run >= cfg.repeat_limit) {
      v.decision = FilterDecision::Drop;
      v.reason = "redundant actions: " + std::to_string(run) + " identical no-effect actions ending at step " +
                 std::to_string(i);
      return v;
    }
  }

  auto k = static_cast<std::size_t>(cfg.stuck_window);
  if (t.termination == Termination::BudgetExhausted && k >= 1 && digests.size() >= k) {
    bool stuck = std::all_of(digests.end() - static_cast<long>(k), digests.end(),
                             [&](const std::string& d) { return d == digests.back(); });
    if (stuck) {
      v.decision = FilterDecision::Drop;
      v.reason = "stuck loop: last " + std::to_string(k) + " observations identical";
    }
  }
  return v;
}

FilterVerdict score_filter(const Trace& t, const ScorerClient& scorer, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::Range, "threshold must be in [0,1]");
  double s = 0.0;
  try {
    s = scorer.score(t.instruction, t);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ScorerFailure) throw;
    throw Error(ErrorCode::ScorerFailure, e.what());
  }
  if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::ScorerFailure, "score outside [0,1]");
  bool keep = s >= threshold;
  return {FilterStage::Score, keep ? FilterDecision::Keep : FilterDecision::Drop, std::nullopt,
          keep ? "score at or above threshold" : "score below threshold", s};
}

std::optional<Trace> apply_review(const Trace& t, const ReviewAnnotation& ann) {
  if (ann.trace_id != t.trace_id) {
    throw Error(ErrorCode::Precondition, "annotation for " + ann.trace_id + " applied to " + t.trace_id);
  }
  switch (ann.verdict) {
    case FilterDecision::Keep:
      return t;
    case FilterDecision::Drop:
      return std::nullopt;
    case FilterDecision::Truncate:
      break;
  }
  if (ann.error_step < 0 || ann.error_step >= static_cast<int>(t.steps.size())) {
    throw Error(ErrorCode::IndexOutOfBounds, "error_step " + std::to_string(ann.error_step) + " outside a " +
                                                 std::to_string(t.steps.size()) + "-step trace");
  }
  if (ann.error_step == 0) return std::nullopt;
  Trace out = t;
  out.steps.resize(static_cast<std::size_t>(ann.error_step));
  out.termination = Termination::Truncated;
  out.metadata[std::string(meta::kDerivedFrom)] = t.trace_id;
  out.trace_id = io::compute_trace_id(out);
  return out;
}

bool selected_for_review(const std::string& trace_id, double review_fraction) noexcept {
  if (review_fraction >= 1.0) return true;
  if (review_fraction <= 0.0) return false;
  auto bucket = fnv1a64(trace_id) % 10000;
  return static_cast<double>(bucket) < review_fraction * 10000.0;
}

namespace {

struct Outcome {
  VerdictChain chain;
  std::optional<Trace> kept;
};

Outcome filter_one(const Trace& t, const TaskRegistry& registry, const ScorerClient& scorer,
                   const std::map<std::string, ReviewAnnotation>& annotations, const FilterConfig& cfg) {
  Outcome o;
  o.chain.trace_id = t.trace_id;
  FilterStage stage = FilterStage::Rule;
  try {
    SimEnv env(registry);
    auto rule = rule_filter(t, env, cfg);
    o.chain.verdicts.push_back(rule);
    if (rule.decision == FilterDecision::Drop) return o;

    stage = FilterStage::Score;
    auto score = score_filter(t, scorer, cfg.threshold);
    o.chain.verdicts.push_back(score);
    if (score.decision == FilterDecision::Drop) return o;

    stage = FilterStage::Review;
    auto it = annotations.find(t.trace_id);
    if (!selected_for_review(t.trace_id, cfg.review_fraction)) {
      o.chain.verdicts.push_back({FilterStage::Review, FilterDecision::Keep, std::nullopt, "not sampled", {}});
      o.kept = t;
    } else if (it == annotations.end()) {
      o.chain.verdicts.push_back({FilterStage::Review, FilterDecision::Keep, std::nullopt, "no annotation", {}});
      o.kept = t;
    } else {
      const auto& ann = it->second;
      o.kept = apply_review(t, ann);
      FilterVerdict v{FilterStage::Review, ann.verdict, std::nullopt, ann.note.empty() ? "reviewed" : ann.note, {}};
      if (ann.verdict == FilterDecision::Truncate) {
        if (o.kept) {
          v.truncate_at = ann.error_step;
        } else {
          v.decision = FilterDecision::Drop;
          v.reason = "empty prefix";
        }
      }
      o.chain.verdicts.push_back(v);
    }
  } catch (const Error& e) {
    o.kept.reset();
    o.chain.error = std::string(to_string(e.code())) + ": " + e.what();
    o.chain.verdicts.push_back({stage, FilterDecision::Drop, std::nullopt, "error", {}});
  }
  if (o.kept) o.chain.output_id = o.kept->trace_id;
  return o;
}

}  // namespace

PipelineResult run_pipeline(const std::vector<Trace>& raw, const TaskRegistry& registry, const ScorerClient& scorer,
                            const std::map<std::string, ReviewAnnotation>& annotations, const FilterConfig& cfg) {
  std::vector<Outcome> outcomes(raw.size());
  parallel_for(raw.size(), cfg.workers,
               [&](std::size_t i) { outcomes[i] = filter_one(raw[i], registry, scorer, annotations, cfg); });
  PipelineResult result;
  for (auto& o : outcomes) {
    if (o.kept) result.output.push_back(std::move(*o.kept));
    result.report.push_back(std::move(o.chain));
  }
  return result;
}

nlohmann::json verdict_chain_to_json(const VerdictChain& c) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : c.verdicts) {
    verdicts.push_back({{"stage", std::string(to_string(v.stage))},
                        {"decision", std::string(to_string(v.decision))},
                        {"truncate_at", v.truncate_at ? nlohmann::json(*v.truncate_at) : nlohmann::json(nullptr)},
                        {"reason", v.reason},
                        {"score", v.score ? nlohmann::json(*v.score) : nlohmann::json(nullptr)}});
  }
  return {{"trace_id", c.trace_id},
          {"verdicts", std::move(verdicts)},
          {"output_id", c.output_id ? nlohmann::json(*c.output_id) : nlohmann::json(nullptr)},
          {"error", c.error ? nlohmann::json(*c.error) : nlohmann::json(nullptr)}};
}

void write_report(std::ostream& out, const std::vector<VerdictChain>& report) {
  for (const auto& c : report) {
    out << verdict_chain_to_json(c).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
}

}  // namespace guiagent
