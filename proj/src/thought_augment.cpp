#include "guiagent/thought_augment.hpp"

#include <span>

#include "guiagent/evaluation.hpp"
#include "guiagent/trace_io.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

std::string_view to_string(Language l) noexcept { return l == Language::En ? "en" : "zh"; }

Language language_from_string(std::string_view s) {
  if (s == "en") return Language::En;
  if (s == "zh") return Language::Zh;
  throw Error(ErrorCode::Range, "language must be en or zh, got '" + std::string(s) + "'");
}

namespace {

std::string describe(const Action& a, const Observation& obs) {
  std::string what;
  if (point_count(a.kind) > 0) {
    if (const Element* e = obs.hit_test(a.start)) {
      what = e->text.empty() ? e->id : "\"" + e->text + "\"";
    } else {
      what = "an empty area";
    }
  }
  switch (a.kind) {
    case ActionKind::Click:
      return "click " + what;
    case ActionKind::LeftDouble:
      return "double-click " + what;
    case ActionKind::RightSingle:
      return "open the context menu on " + what;
    case ActionKind::LongPress:
      return "long-press " + what;
    case ActionKind::Drag:
      return "drag from " + what;
    case ActionKind::Scroll:
      return "scroll " + std::string(to_string(a.direction)) + " over " + what;
    case ActionKind::Type:
      return "type \"" + a.text + "\"";
    case ActionKind::Hotkey:
      return "press " + a.text;
    case ActionKind::Wait:
      return "wait for the screen to settle";
    case ActionKind::Finished:
      return "report that the task is complete";
    case ActionKind::CallUser:
      return "ask the user for help";
    case ActionKind::PressBack:
      return "go back";
    case ActionKind::PressHome:
      return "go to the home screen";
    case ActionKind::PressEnter:
      return "press enter";
  }
  return "act";
}

}  // namespace

Annotation ScriptedAnnotator::annotate(const PromptContext& ctx, const std::optional<Action>& next_action,
                                       Language language, std::uint64_t) const {
  if (ctx.observations.empty()) throw Error(ErrorCode::AnnotatorFailure, "context without an observation");
  const auto& obs = ctx.current();
  ReasoningPattern pattern = ReasoningPattern::LongTermConsistency;
  if (ctx.history.empty()) {
    pattern = ReasoningPattern::TaskDecomposition;
  } else if (next_action && *next_action == ctx.history.back().action) {
    pattern = ReasoningPattern::Reflection;
  } else if (next_action && next_action->kind == ActionKind::Scroll) {
    pattern = ReasoningPattern::TrialAndError;
  } else if (ctx.observations.size() >= 2 &&
             ctx.observations[ctx.observations.size() - 2].observation.digest != obs.digest) {
    pattern = ReasoningPattern::MilestoneRecognition;
  }
  std::string body;
  std::string plan = next_action ? describe(*next_action, obs) : "decide on the next move";
  switch (pattern) {
    case ReasoningPattern::TaskDecomposition:
      body = "The task \"" + ctx.instruction + "\" breaks into a few steps; I start: " + plan + ".";
      break;
    case ReasoningPattern::Reflection:
      body = "Repeating the same move did not help before, so I check it once more: " + plan + ".";
      break;
    case ReasoningPattern::TrialAndError:
      body = "The target may be off screen; I will " + plan + " and look again.";
      break;
    case ReasoningPattern::MilestoneRecognition:
      body = "The previous step took effect. Next I " + plan + ".";
      break;
    case ReasoningPattern::LongTermConsistency:
      body = "Still working toward \"" + ctx.instruction + "\": " + plan + ".";
      break;
  }
  if (!ctx.history.empty() && ctx.history.back().thought) {
    body += " (Earlier: " + ctx.history.back().thought->substr(0, 40) + ")";
  }
  std::string tag = "[" + std::string(to_string(pattern)) + "]";
  if (language == Language::Zh) tag += "[zh]";
  return {tag + " " + body, pattern};
}

Trace actre_annotate(const Trace& trace, const AnnotatorClient& client, const ActReConfig& cfg) {
  if (cfg.retries < 0) throw Error(ErrorCode::Precondition, "retries must be >= 0");
  Trace out = trace;
  if (out.steps.empty()) return trace;
  const PlatformProfile profile(trace.platform);
  for (auto& s : out.steps) validate_action(s.action, profile);

  for (std::size_t n = 0; n < out.steps.size(); ++n) {
    auto& step = out.steps[n];
    int window = cfg.window > 0 ? cfg.window : static_cast<int>(n) + 1;
    auto ctx = window_context(out.instruction, std::span<const Step>(out.steps).first(n), step.observation, window);
    ctx.platform = out.platform;
    std::optional<Annotation> got;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.retries && !got; ++attempt) {
      try {
        got = client.annotate(ctx, step.action, cfg.language,
                              derive_seed(derive_seed(cfg.seed, n), static_cast<std::uint64_t>(attempt)));
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    if (!got) {
      throw Error(ErrorCode::AnnotatorFailure, "step " + std::to_string(n) + " of trace " + trace.trace_id + ": " +
                                                   last_error);
    }
    step.thought = got->thought;
  }
  out.metadata[std::string(meta::kDerivedFrom)] = trace.trace_id;
  out.metadata["augment"] = "actre:" + client.id();
  out.trace_id = io::compute_trace_id(out);
  return out;
}

std::optional<BootstrapSample> bootstrap_thought(const PromptContext& ctx, const PolicyClient& policy,
                                                 const Action& gold, const std::optional<NormBox>& gold_box,
                                                 const BootstrapConfig& cfg, std::uint64_t seed) {
  if (cfg.max_try < 1) throw Error(ErrorCode::Precondition, "max_try must be >= 1");
  const PlatformProfile profile(ctx.platform);
  for (int i = 0; i < cfg.max_try; ++i) {
    auto raw = policy.respond(ctx, derive_seed(seed, static_cast<std::uint64_t>(i)));
    try {
      auto out = parse_policy_output(raw);
      auto action = parse_action(out.action_line, profile);
      if (action_match(action, gold, gold_box).correct()) {
        return BootstrapSample{out.thought.value_or(""), action, i + 1};
      }
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

Trace bootstrap_trace(const Trace& trace, Environment& env, const Task& task, const PolicyClient& policy,
                      const BootstrapConfig& cfg, std::uint64_t seed, BootstrapStats* stats) {
  Trace out = trace;
  BootstrapStats local;
  Observation obs = env.reset(task);
  for (std::size_t n = 0; n < out.steps.size(); ++n) {
    auto& step = out.steps[n];
    if (obs.digest != step.observation.digest) {
      throw Error(ErrorCode::ReplayMismatch, "step " + std::to_string(n) + " of trace " + trace.trace_id);
    }
    auto ctx = window_context(out.instruction, std::span<const Step>(out.steps).first(n), obs, kDefaultWindow);
    ctx.platform = out.platform;
    ctx.env = &env;
    std::optional<NormBox> box;
    if (point_count(step.action.kind) > 0) {
      if (const Element* e = obs.hit_test(step.action.start)) box = e->box;
    }
    ++local.steps;
    auto got = bootstrap_thought(ctx, policy, step.action, box, cfg, derive_seed(seed, n));
    if (got) {
      ++local.matched;
      local.samples += got->tries;
      step.thought = got->thought;
    } else {
      local.samples += cfg.max_try;
      step.thought.reset();
    }
    if (is_terminal(step.action.kind)) break;
    obs = env.apply_action(step.action);
  }
  out.metadata[std::string(meta::kDerivedFrom)] = trace.trace_id;
  out.metadata["augment"] = "bootstrap:" + policy.id();
  out.metadata["language"] = std::string(to_string(cfg.language));
  out.trace_id = io::compute_trace_id(out);
  if (stats) *stats = local;
  return out;
}

}  // namespace guiagent
