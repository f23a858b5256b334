#pragma once

#include <memory>
#include <random>
#include <string>
#include <string_view>

#include "guiagent/agent_loop.hpp"

namespace guiagent {

// Follows the simulator's scripted expert: the oracle action while the goal
// is open, Finished() once it holds, CallUser() when no solution exists.
class OraclePolicy final : public PolicyClient {
 public:
  std::string respond(const PromptContext& ctx, std::uint64_t seed) const override;
  std::string id() const override { return "scripted:oracle"; }
};

// With probability p per step, replaces the wrapped policy's output by a
// uniformly random valid action for the platform.
class NoisyPolicy final : public PolicyClient {
 public:
  NoisyPolicy(std::shared_ptr<const PolicyClient> base, double p);

  std::string respond(const PromptContext& ctx, std::uint64_t seed) const override;
  std::string id() const override;
  double noise() const noexcept { return p_; }

 private:
  std::shared_ptr<const PolicyClient> base_;
  double p_;
};

// Always returns the same text.
class FixedPolicy final : public PolicyClient {
 public:
  FixedPolicy(std::string output, std::string id);

  std::string respond(const PromptContext&, std::uint64_t) const override { return output_; }
  std::string id() const override { return id_; }

 private:
  std::string output_;
  std::string id_;
};

// Kind uniform over the profile, coordinates uniform on the 4-decimal grid.
Action random_action(const PlatformProfile& profile, std::mt19937_64& rng);

// "Thought: ...\nAction: ..." with the thought line omitted when absent.
std::string format_policy_output(const std::optional<std::string>& thought, const Action& action);

// Builds a policy from a spec string:
//   scripted:oracle | scripted:noisy-oracle:<p> | scripted:wait |
//   scripted:calluser | scripted:finish | http://host:port/path
std::shared_ptr<const PolicyClient> make_policy(std::string_view spec, double timeout_seconds = 30.0);

}  // namespace guiagent
