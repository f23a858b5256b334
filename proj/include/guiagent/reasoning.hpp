#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace guiagent {

// Annotation taxonomy for thoughts.
enum class ReasoningPattern {
  TaskDecomposition,
  LongTermConsistency,
  MilestoneRecognition,
  TrialAndError,
  Reflection,
};

inline constexpr std::array<ReasoningPattern, 5> kAllReasoningPatterns = {
    ReasoningPattern::TaskDecomposition, ReasoningPattern::LongTermConsistency,
    ReasoningPattern::MilestoneRecognition, ReasoningPattern::TrialAndError,
    ReasoningPattern::Reflection,
};

constexpr std::string_view to_string(ReasoningPattern p) noexcept {
  switch (p) {
    case ReasoningPattern::TaskDecomposition: return "task_decomposition";
    case ReasoningPattern::LongTermConsistency: return "long_term_consistency";
    case ReasoningPattern::MilestoneRecognition: return "milestone_recognition";
    case ReasoningPattern::TrialAndError: return "trial_and_error";
    case ReasoningPattern::Reflection: return "reflection";
  }
  return "long_term_consistency";
}

constexpr std::optional<ReasoningPattern> reasoning_pattern_from_string(std::string_view s) noexcept {
  for (auto p : kAllReasoningPatterns) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

}  // namespace guiagent
