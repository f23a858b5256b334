#include "guiagent/agent_loop.hpp"

#include "guiagent/trace_io.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::Finished: return "finished";
    case Termination::CallUser: return "call_user";
    case Termination::BudgetExhausted: return "budget_exhausted";
    case Termination::EnvError: return "env_error";
    case Termination::Truncated: return "truncated";
  }
  return "budget_exhausted";
}

Termination termination_from_string(std::string_view s) {
  for (auto t : {Termination::Finished, Termination::CallUser, Termination::BudgetExhausted,
                 Termination::EnvError, Termination::Truncated}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::CorruptRecord, "unknown termination '" + std::string(s) + "'");
}

std::string Trace::meta_value(std::string_view key, std::string_view fallback) const {
  auto it = metadata.find(std::string(key));
  return it == metadata.end() ? std::string(fallback) : it->second;
}

void validate_trace(const Trace& t) {
  if (t.instruction.empty()) throw Error(ErrorCode::CorruptRecord, "trace without instruction");
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (t.steps[i].index != static_cast<int>(i)) {
      throw Error(ErrorCode::CorruptRecord, "step indices must be 0..n-1");
    }
    if (i + 1 < t.steps.size() && is_terminal(t.steps[i].action.kind)) {
      throw Error(ErrorCode::CorruptRecord, "terminal action before the last step");
    }
  }
  auto last = t.steps.empty() ? std::nullopt : std::optional<ActionKind>(t.steps.back().action.kind);
  bool last_finished = last == ActionKind::Finished;
  bool last_call_user = last == ActionKind::CallUser;
  if ((t.termination == Termination::Finished) != last_finished ||
      (t.termination == Termination::CallUser) != last_call_user) {
    throw Error(ErrorCode::CorruptRecord, "termination '" + std::string(to_string(t.termination)) +
                                              "' disagrees with the last action");
  }
  if (t.steps.empty() && t.termination != Termination::EnvError && t.termination != Termination::Truncated) {
    throw Error(ErrorCode::CorruptRecord, "empty trace must end in env_error");
  }
}

PromptContext window_context(std::string instruction, std::span<const Step> history,
                             const Observation& current, int window) {
  if (window < 1) throw Error(ErrorCode::Precondition, "window must be >= 1");
  PromptContext ctx;
  ctx.instruction = std::move(instruction);
  ctx.window = window;
  ctx.history.reserve(history.size());
  for (const auto& s : history) ctx.history.push_back({s.thought, s.action});
  std::size_t keep = static_cast<std::size_t>(window - 1);
  std::size_t first = history.size() > keep ? history.size() - keep : 0;
  for (std::size_t i = first; i < history.size(); ++i) {
    ctx.observations.push_back({history[i].index, history[i].observation});
  }
  ctx.observations.push_back({static_cast<int>(history.size()), current});
  return ctx;
}

namespace {

std::string_view trim_ws(std::string_view s) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

constexpr std::string_view kThoughtMarker = "Thought:";
constexpr std::string_view kActionMarker = "Action:";

}  // namespace

PolicyOutput parse_policy_output(std::string_view text) {
  auto action_pos = text.rfind(kActionMarker);
  if (action_pos == std::string_view::npos) {
    throw Error(ErrorCode::MissingAction, "policy output has no 'Action:' marker");
  }
  PolicyOutput out;
  auto rest = text.substr(action_pos + kActionMarker.size());
  while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t' || rest.front() == '\n' ||
                           rest.front() == '\r')) {
    rest.remove_prefix(1);
  }
  out.action_line = std::string(trim_ws(rest.substr(0, rest.find_first_of("\r\n"))));

  auto thought_pos = text.find(kThoughtMarker);
  if (thought_pos != std::string_view::npos && thought_pos < action_pos) {
    auto begin = thought_pos + kThoughtMarker.size();
    auto end = text.find(kActionMarker, begin);
    auto body = trim_ws(text.substr(begin, end - begin));
    if (!body.empty()) out.thought = std::string(body);
  }
  return out;
}

std::vector<std::string> PolicyClient::sample(const PromptContext& ctx, int k, std::uint64_t seed) const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(std::max(k, 0)));
  for (int i = 0; i < k; ++i) out.push_back(respond(ctx, derive_seed(seed, static_cast<std::uint64_t>(i))));
  return out;
}

Trace run_episode(const Task& task, Environment& env, const PolicyClient& policy,
                  const EpisodeConfig& config) {
  if (config.budget < 1) throw Error(ErrorCode::Precondition, "budget must be >= 1");
  Trace trace;
  trace.instruction = task.instruction;
  trace.platform = task.platform;
  trace.metadata = {
      {std::string(meta::kTaskId), task.task_id},
      {std::string(meta::kTaskSeed), std::to_string(task.seed)},
      {std::string(meta::kEpisodeSeed), std::to_string(config.seed)},
      {std::string(meta::kApp), task.app},
      {std::string(meta::kPolicy), policy.id()},
      {std::string(meta::kBudget), std::to_string(config.budget)},
      {std::string(meta::kWindow), std::to_string(config.window)},
  };
  const PlatformProfile profile(task.platform);

  auto finish = [&](Termination t) {
    trace.termination = t;
    trace.trace_id = io::compute_trace_id(trace);
    return trace;
  };

  Observation obs;
  try {
    obs = env.reset(task);
  } catch (const Error& e) {
    trace.metadata["error"] = e.what();
    return finish(Termination::EnvError);
  }

  for (int i = 0; i < config.budget; ++i) {
    auto ctx = window_context(task.instruction, trace.steps, obs, config.window);
    ctx.platform = task.platform;
    ctx.env = &env;
    std::string raw;
    try {
      raw = policy.respond(ctx, derive_seed(config.seed, static_cast<std::uint64_t>(i)));
    } catch (const Error& e) {
      trace.metadata["error"] = e.what();
      return finish(Termination::EnvError);
    }
    Step step{i, obs, std::nullopt, Action::wait(), raw};
    try {
      auto out = parse_policy_output(raw);
      step.thought = out.thought;
      step.action = parse_action(out.action_line, profile);
    } catch (const Error&) {
      step.action = Action::wait();
    }
    const auto kind = step.action.kind;
    trace.steps.push_back(std::move(step));
    if (kind == ActionKind::Finished) return finish(Termination::Finished);
    if (kind == ActionKind::CallUser) return finish(Termination::CallUser);
    try {
      obs = env.apply_action(trace.steps.back().action);
    } catch (const Error& e) {
      trace.metadata["error"] = e.what();
      return finish(Termination::EnvError);
    }
  }
  return finish(Termination::BudgetExhausted);
}

bool episode_succeeded(const Trace& trace, const Environment& env) {
  return trace.termination == Termination::Finished && env.check_goal();
}

}  // namespace guiagent
