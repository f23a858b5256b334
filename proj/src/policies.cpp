#include "guiagent/policies.hpp"

#include <array>
#include <charconv>

#include "guiagent/http_clients.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

std::string format_policy_output(const std::optional<std::string>& thought, const Action& action) {
  std::string out;
  if (thought) out += "Thought: " + *thought + "\n";
  out += "Action: " + serialize_action(action);
  return out;
}

std::string OraclePolicy::respond(const PromptContext& ctx, std::uint64_t) const {
  if (ctx.env == nullptr) {
    throw Error(ErrorCode::Precondition, "oracle policy needs a simulator handle in the context");
  }
  if (ctx.env->check_goal()) {
    return format_policy_output("The goal is reached, so the task is complete.", Action::finished());
  }
  try {
    auto step = ctx.env->oracle_action();
    return format_policy_output(step.thought, step.action);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoOracle) throw;
    return format_policy_output("I cannot reach the goal from here without help.", Action::call_user());
  }
}

NoisyPolicy::NoisyPolicy(std::shared_ptr<const PolicyClient> base, double p) : base_(std::move(base)), p_(p) {
  if (!base_) throw Error(ErrorCode::Precondition, "noisy policy needs a base policy");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::Range, "noise probability must be in [0,1]");
}

std::string NoisyPolicy::id() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p_);
  return "noisy(" + base_->id() + "," + buf + ")";
}

std::string NoisyPolicy::respond(const PromptContext& ctx, std::uint64_t seed) const {
  std::mt19937_64 rng(derive_seed(seed, "noise"));
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < p_) {
    return format_policy_output("Let me try something different here.",
                                random_action(PlatformProfile(ctx.platform), rng));
  }
  return base_->respond(ctx, derive_seed(seed, "base"));
}

FixedPolicy::FixedPolicy(std::string output, std::string id) : output_(std::move(output)), id_(std::move(id)) {}

Action random_action(const PlatformProfile& profile, std::mt19937_64& rng) {
  static constexpr std::array<std::string_view, 6> kWords = {"hello", "test", "Alice", "settings", "42", "ok"};
  static constexpr std::array<std::string_view, 7> kKeys = {"enter", "ctrl+a", "ctrl+z", "delete",
                                                            "escape", "ctrl+shift+t", "tab"};
  auto kinds = profile.allowed_kinds();
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto coord = [&rng] { return static_cast<double>(rng() % 10001) / 10000.0; };
  Action a;
  a.kind = kinds[pick(kinds.size())];
  switch (point_count(a.kind)) {
    case 2:
      a.start = {coord(), coord()};
      a.end = {coord(), coord()};
      break;
    case 1:
      a.start = {coord(), coord()};
      break;
    default:
      break;
  }
  if (a.kind == ActionKind::Scroll) {
    static constexpr std::array<ScrollDirection, 4> dirs = {ScrollDirection::Up, ScrollDirection::Down,
                                                            ScrollDirection::Left, ScrollDirection::Right};
    a.direction = dirs[pick(dirs.size())];
  } else if (a.kind == ActionKind::Type) {
    a.text = std::string(kWords[pick(kWords.size())]);
  } else if (a.kind == ActionKind::Hotkey) {
    a.text = std::string(kKeys[pick(kKeys.size())]);
  }
  return a;
}

std::shared_ptr<const PolicyClient> make_policy(std::string_view spec, double timeout_seconds) {
  if (spec.starts_with("http://") || spec.starts_with("https://")) {
    return std::make_shared<HttpPolicyClient>(std::string(spec), timeout_seconds);
  }
  if (spec == "scripted:oracle") return std::make_shared<OraclePolicy>();
  if (spec == "scripted:wait") return std::make_shared<FixedPolicy>("Action: Wait()", "scripted:wait");
  if (spec == "scripted:calluser") return std::make_shared<FixedPolicy>("Action: CallUser()", "scripted:calluser");
  if (spec == "scripted:finish") return std::make_shared<FixedPolicy>("Action: Finished()", "scripted:finish");
  constexpr std::string_view noisy = "scripted:noisy-oracle:";
  if (spec.starts_with(noisy)) {
    auto tail = spec.substr(noisy.size());
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), p);
    if (ec != std::errc() || ptr != tail.data() + tail.size()) {
      throw Error(ErrorCode::Syntax, "bad noise probability in '" + std::string(spec) + "'");
    }
    return std::make_shared<NoisyPolicy>(std::make_shared<OraclePolicy>(), p);
  }
  throw Error(ErrorCode::NotFound, "unknown policy '" + std::string(spec) + "'");
}

}  // namespace guiagent
