#pragma once

#include <string>

#include "guiagent/agent_loop.hpp"
#include "guiagent/filter_pipeline.hpp"
#include "guiagent/thought_augment.hpp"

namespace guiagent {

// POSTs JSON to a fixed URL. Throws Transport on connection failures and
// non-2xx responses.
class JsonEndpoint {
 public:
  JsonEndpoint(std::string url, double timeout_seconds);
  std::string post(const std::string& body) const;
  const std::string& url() const noexcept { return url_; }

 private:
  std::string url_;
  std::string origin_;
  std::string path_;
  double timeout_;
};

// Sends the PromptContext document (plus "seed") and returns the body as the
// raw policy output.
class HttpPolicyClient final : public PolicyClient {
 public:
  HttpPolicyClient(std::string url, double timeout_seconds);
  std::string respond(const PromptContext& ctx, std::uint64_t seed) const override;
  std::string id() const override { return endpoint_.url(); }

 private:
  JsonEndpoint endpoint_;
};

// Request {"context", "next_action", "language", "seed"}; the body is the thought.
class HttpAnnotatorClient final : public AnnotatorClient {
 public:
  HttpAnnotatorClient(std::string url, double timeout_seconds);
  Annotation annotate(const PromptContext& ctx, const std::optional<Action>& next_action, Language language,
                      std::uint64_t seed) const override;
  std::string id() const override { return endpoint_.url(); }

 private:
  JsonEndpoint endpoint_;
};

// Request {"instruction", "trace"}; response {"score": x}.
class HttpScorerClient final : public ScorerClient {
 public:
  HttpScorerClient(std::string url, double timeout_seconds);
  double score(const std::string& instruction, const Trace& trace) const override;
  std::string id() const override { return endpoint_.url(); }

 private:
  JsonEndpoint endpoint_;
};

}  // namespace guiagent
