#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "guiagent/agent_loop.hpp"
#include "guiagent/reasoning.hpp"

namespace guiagent {

enum class Language { En, Zh };

std::string_view to_string(Language l) noexcept;
Language language_from_string(std::string_view s);

struct Annotation {
  std::string thought;
  std::optional<ReasoningPattern> pattern;
};

// Produces a thought for the current step of `ctx`, optionally told which
// action follows it. Throws AnnotatorFailure or Transport on failure.
class AnnotatorClient {
 public:
  virtual ~AnnotatorClient() = default;

  virtual Annotation annotate(const PromptContext& ctx, const std::optional<Action>& next_action, Language language,
                              std::uint64_t seed) const = 0;
  virtual std::string id() const = 0;
};

// Templated thoughts prefixed with their pattern tag, e.g.
// "[trial_and_error] ...". The pattern is read off the context: first step,
// a repeated action, a scroll, a changed screen, or none of these.
class ScriptedAnnotator final : public AnnotatorClient {
 public:
  Annotation annotate(const PromptContext& ctx, const std::optional<Action>& next_action, Language language,
                      std::uint64_t seed) const override;
  std::string id() const override { return "scripted"; }
};

struct ActReConfig {
  // Observations shown per prompt; 0 shows all of them.
  int window = 0;
  int retries = 2;
  Language language = Language::En;
  std::uint64_t seed = 0;
};

// Annotates every step in order. The prompt for step n carries the thoughts
// already generated for steps < n. Actions and observations are untouched;
// the result gets a fresh id and derived_from metadata. Throws
// AnnotatorFailure once a step has failed retries + 1 times.
Trace actre_annotate(const Trace& trace, const AnnotatorClient& client, const ActReConfig& cfg = {});

struct BootstrapConfig {
  int max_try = 16;
  Language language = Language::En;
};

struct BootstrapSample {
  std::string thought;
  Action action;
  int tries = 0;  // samples drawn, including the accepted one
};

// Draws up to max_try policy samples and returns the first whose action
// matches `gold` (box membership for coordinates when `gold_box` is given).
// Sample i uses derive_seed(seed, i), as PolicyClient::sample does.
std::optional<BootstrapSample> bootstrap_thought(const PromptContext& ctx, const PolicyClient& policy,
                                                 const Action& gold, const std::optional<NormBox>& gold_box,
                                                 const BootstrapConfig& cfg, std::uint64_t seed);

struct BootstrapStats {
  int steps = 0;
  int matched = 0;
  int samples = 0;
};

// Replays `trace` in `env` and bootstraps a thought for each step; steps
// without a matching sample keep no thought. Returns the augmented trace.
Trace bootstrap_trace(const Trace& trace, Environment& env, const Task& task, const PolicyClient& policy,
                      const BootstrapConfig& cfg, std::uint64_t seed, BootstrapStats* stats = nullptr);

}  // namespace guiagent
