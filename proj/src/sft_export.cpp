#include "guiagent/sft_export.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <span>

#include "guiagent/trace_io.hpp"

namespace guiagent {

std::string_view to_string(StepRole r) noexcept {
  return r == StepRole::Corrected ? "corrected" : "erroneous";
}

StepRole step_role_from_string(std::string_view s) {
  if (s == "corrected") return StepRole::Corrected;
  if (s == "erroneous") return StepRole::Erroneous;
  throw Error(ErrorCode::CorruptRecord, "unknown step role '" + std::string(s) + "'");
}

std::vector<SftSample> export_sft(const std::vector<Trace>& traces, const std::vector<StepDesignation>& designations,
                                  const SftConfig& cfg) {
  std::map<std::string, const Trace*> by_id;
  for (const auto& t : traces) by_id[t.trace_id] = &t;

  std::map<std::pair<std::string, int>, StepRole> roles;
  for (const auto& d : designations) {
    auto it = by_id.find(d.trace_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::DanglingCorrection, "designation names unknown trace " + d.trace_id);
    }
    if (d.step_index < 0 || d.step_index >= static_cast<int>(it->second->steps.size())) {
      throw Error(ErrorCode::DanglingCorrection, "designation names step " + std::to_string(d.step_index) +
                                                     " of " + std::to_string(it->second->steps.size()) +
                                                     "-step trace " + d.trace_id);
    }
    roles[{d.trace_id, d.step_index}] = d.role;
  }

  std::vector<SftSample> out;
  for (const auto& t : traces) {
    std::span<const Step> steps(t.steps);
    for (const auto& step : t.steps) {
      auto ctx = window_context(t.instruction, steps.first(static_cast<std::size_t>(step.index)), step.observation,
                                cfg.window);
      ctx.platform = t.platform;
      auto it = roles.find({t.trace_id, step.index});
      bool erroneous = it != roles.end() && it->second == StepRole::Erroneous;
      SftSample s{t.trace_id, step.index, io::prompt_context_to_json(ctx), step.thought, step.action, !erroneous};
      if (cfg.include_vanilla && step.thought) {
        SftSample vanilla = s;
        vanilla.target_thought.reset();
        out.push_back(std::move(s));
        out.push_back(std::move(vanilla));
      } else {
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

nlohmann::json sft_sample_to_json(const SftSample& s) {
  return {{"trace_id", s.trace_id},
          {"step_index", s.step_index},
          {"context", s.context},
          {"target_thought", s.target_thought ? nlohmann::json(*s.target_thought) : nlohmann::json(nullptr)},
          {"target_action", serialize_action(s.target_action)},
          {"loss_mask", s.loss_mask}};
}

void write_sft_jsonl(std::ostream& out, const std::vector<SftSample>& samples) {
  for (const auto& s : samples) out << sft_sample_to_json(s).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

std::vector<StepDesignation> read_designations(std::istream& in) {
  std::vector<StepDesignation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      io::require_exact_keys(j, {"trace_id", "step_index", "role"}, "designation");
      out.push_back({j["trace_id"].get<std::string>(), j["step_index"].get<int>(),
                     step_role_from_string(j["role"].get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::CorruptRecord, "designation line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace guiagent
