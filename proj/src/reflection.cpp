#include "guiagent/reflection.hpp"

#include <istream>
#include <ostream>
#include <span>

#include "guiagent/evaluation.hpp"
#include "guiagent/replay.hpp"
#include "guiagent/trace_io.hpp"

namespace guiagent {

using nlohmann::json;

std::string_view to_string(CorrectionKind k) noexcept {
  return k == CorrectionKind::ErrorCorrection ? "error_correction" : "post_reflection";
}

CorrectionKind correction_kind_from_string(std::string_view s) {
  if (s == "error_correction") return CorrectionKind::ErrorCorrection;
  if (s == "post_reflection") return CorrectionKind::PostReflection;
  throw Error(ErrorCode::CorruptRecord, "unknown correction kind '" + std::string(s) + "'");
}

json correction_to_json(const Correction& c) {
  return {{"type", "correction"},
          {"trace_id", c.trace_id},
          {"step_index", c.step_index},
          {"thought", c.thought},
          {"action", serialize_action(c.action)},
          {"kind", std::string(to_string(c.kind))}};
}

Correction correction_from_json(const json& j, Platform platform) {
  if (j.is_object() && j.contains("annotation_id")) {
    auto copy = j;
    copy.erase("annotation_id");
    return correction_from_json(copy, platform);
  }
  io::require_exact_keys(j, {"type", "trace_id", "step_index", "thought", "action", "kind"}, "correction");
  if (j["type"] != "correction") throw Error(ErrorCode::CorruptRecord, "correction: type must be 'correction'");
  try {
    Correction c;
    c.trace_id = j["trace_id"].get<std::string>();
    c.step_index = j["step_index"].get<int>();
    c.thought = j["thought"].get<std::string>();
    c.action = parse_action(j["action"].get<std::string>(), PlatformProfile(platform));
    c.kind = correction_kind_from_string(j["kind"].get<std::string>());
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("correction: ") + e.what());
  }
}

void validate_correction(const Trace& t, const Correction& c) {
  if (c.trace_id != t.trace_id) {
    throw Error(ErrorCode::Precondition, "correction for " + c.trace_id + " applied to " + t.trace_id);
  }
  const int n = static_cast<int>(t.steps.size());
  if (c.step_index < 0 || c.step_index >= n) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "step_index " + std::to_string(c.step_index) + " outside a " + std::to_string(n) + "-step trace");
  }
  if (c.kind == CorrectionKind::PostReflection && c.step_index < 1) {
    throw Error(ErrorCode::IndexOutOfBounds, "post-reflection needs an erroneous step before step_index");
  }
  validate_action(c.action, PlatformProfile(t.platform));
  if (c.action == t.steps[static_cast<std::size_t>(c.step_index)].action) {
    throw Error(ErrorCode::IdenticalPair, "corrected action equals the recorded action at step " +
                                              std::to_string(c.step_index));
  }
}

namespace {

PreferencePair make_pair(const Trace& t, const Correction& c) {
  validate_correction(t, c);
  auto s = static_cast<std::size_t>(c.step_index);
  PreferencePair p;
  p.trace_id = t.trace_id;
  p.task_id = t.meta_value(meta::kTaskId);
  p.kind = c.kind;
  p.step_index = c.step_index;
  p.instruction = t.instruction;
  p.platform = t.platform;
  p.prefix.assign(t.steps.begin(), t.steps.begin() + static_cast<long>(s));
  p.current = t.steps[s].observation;
  p.rejected = {t.steps[s].thought, t.steps[s].action};
  p.chosen = {c.thought, c.action};
  return p;
}

}  // namespace

PreferencePair build_error_correction_pair(const Trace& t, const Correction& c) {
  if (c.kind != CorrectionKind::ErrorCorrection) {
    throw Error(ErrorCode::Precondition, "expected an error_correction correction");
  }
  return make_pair(t, c);
}

PreferencePair build_post_reflection_pair(const Trace& t, const Correction& c) {
  if (c.kind != CorrectionKind::PostReflection) {
    throw Error(ErrorCode::Precondition, "expected a post_reflection correction");
  }
  return make_pair(t, c);
}

PreferencePair build_pair(const Trace& t, const Correction& c) {
  return c.kind == CorrectionKind::ErrorCorrection ? build_error_correction_pair(t, c)
                                                   : build_post_reflection_pair(t, c);
}

void verify_pair_prefix(const PreferencePair& p, SimEnv& env) {
  const Task& task = env.registry().get(p.task_id);
  auto digests = replay_steps(env, task, p.prefix);
  if (digests.back() != p.current.digest) {
    throw Error(ErrorCode::ReplayMismatch, "divergence observation of pair on " + p.trace_id + " does not replay");
  }
}

std::vector<Correction> scripted_corrections(const Trace& t, SimEnv& env) {
  const Task& task = task_for_trace(t, env.registry());
  env.reset(task);
  std::vector<Correction> out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& step = t.steps[i];
    if (env.observation().digest != step.observation.digest) {
      throw Error(ErrorCode::ReplayMismatch, "step " + std::to_string(i) + " of trace " + t.trace_id);
    }
    Action want;
    std::string thought;
    std::optional<NormBox> box;
    if (env.check_goal()) {
      want = Action::finished();
      thought = "The goal is reached, so the task is complete.";
    } else {
      try {
        auto o = env.oracle_action();
        want = o.action;
        thought = o.thought;
        box = o.target_box;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoOracle) throw;
        return out;
      }
    }
    if (!action_match(step.action, want, box).correct()) {
      out.push_back({t.trace_id, static_cast<int>(i), thought, want, CorrectionKind::ErrorCorrection});
      if (is_terminal(step.action.kind) || i + 1 >= t.steps.size()) return out;
      env.apply_action(step.action);
      const auto& next = t.steps[i + 1];
      if (env.check_goal()) {
        want = Action::finished();
        thought = "My previous action already finished the job, so I stop here.";
        box.reset();
      } else {
        try {
          auto o = env.oracle_action();
          want = o.action;
          thought = o.thought;
          box = o.target_box;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoOracle) throw;
          return out;
        }
      }
      if (!action_match(next.action, want, box).correct()) {
        out.push_back({t.trace_id, static_cast<int>(i + 1), thought, want, CorrectionKind::PostReflection});
      }
      return out;
    }
    if (is_terminal(step.action.kind)) break;
    env.apply_action(step.action);
  }
  return out;
}

DpoRecord to_dpo_record(const PreferencePair& p, int window) {
  auto ctx = window_context(p.instruction, p.prefix, p.current, window);
  ctx.platform = p.platform;
  return {p.trace_id, p.kind, p.step_index, io::prompt_context_to_json(ctx), p.chosen, p.rejected};
}

namespace {

json branch_to_json(const Branch& b) {
  return {{"thought", b.thought ? json(*b.thought) : json(nullptr)}, {"action", serialize_action(b.action)}};
}

Branch branch_from_json(const json& j, Platform platform) {
  io::require_exact_keys(j, {"thought", "action"}, "branch");
  Branch b;
  if (!j["thought"].is_null()) b.thought = j["thought"].get<std::string>();
  b.action = parse_action(j["action"].get<std::string>(), PlatformProfile(platform));
  return b;
}

}  // namespace

void emit_dpo_dataset(std::ostream& out, const std::vector<PreferencePair>& pairs, int window) {
  out << json{{"format", "dpo-pairs"}, {"version", 1}, {"count", pairs.size()}}.dump() << '\n';
  for (const auto& p : pairs) {
    auto r = to_dpo_record(p, window);
    json line{{"trace_id", r.trace_id},
              {"kind", std::string(to_string(r.kind))},
              {"step_index", r.step_index},
              {"context", r.context},
              {"chosen", branch_to_json(r.chosen)},
              {"rejected", branch_to_json(r.rejected)}};
    out << line.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

std::vector<DpoRecord> read_dpo_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::CorruptRecord, "dpo dataset: missing header");
  std::size_t count = 0;
  try {
    auto h = json::parse(line);
    io::require_exact_keys(h, {"format", "version", "count"}, "dpo header");
    if (h["format"] != "dpo-pairs") throw Error(ErrorCode::CorruptRecord, "dpo dataset: wrong format tag");
    if (h["version"] != 1) throw Error(ErrorCode::SchemaVersionMismatch, "dpo dataset: unsupported version");
    count = h["count"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("dpo header: ") + e.what());
  }
  std::vector<DpoRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      io::require_exact_keys(j, {"trace_id", "kind", "step_index", "context", "chosen", "rejected"}, "dpo record");
      auto platform = platform_from_string(j["context"].at("platform").get<std::string>());
      out.push_back({j["trace_id"].get<std::string>(), correction_kind_from_string(j["kind"].get<std::string>()),
                     j["step_index"].get<int>(), j["context"], branch_from_json(j["chosen"], platform),
                     branch_from_json(j["rejected"], platform)});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorruptRecord, std::string("dpo record: ") + e.what());
    }
  }
  if (out.size() != count) {
    throw Error(ErrorCode::CorruptRecord, "dpo dataset: header says " + std::to_string(count) + " records, found " +
                                              std::to_string(out.size()));
  }
  return out;
}

std::vector<Correction> read_corrections(std::istream& in,
                                         const std::function<Platform(const std::string&)>& platform_of) {
  std::vector<Correction> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorruptRecord, std::string("corrections: ") + e.what());
    }
    if (j.value("type", std::string()) != "correction") continue;
    out.push_back(correction_from_json(j, platform_of(j.value("trace_id", std::string()))));
  }
  return out;
}

}  // namespace guiagent
