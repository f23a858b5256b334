#include "guiagent/http_clients.hpp"

#include <cmath>

#include "httplib.h"

#include "guiagent/trace_io.hpp"

namespace guiagent {

JsonEndpoint::JsonEndpoint(std::string url, double timeout_seconds) : url_(std::move(url)), timeout_(timeout_seconds) {
  auto scheme = url_.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::Transport, "not a URL: " + url_);
  auto slash = url_.find('/', scheme + 3);
  origin_ = url_.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url_.substr(slash);
}

std::string JsonEndpoint::post(const std::string& body) const {
  httplib::Client cli(origin_);
  auto secs = static_cast<time_t>(timeout_);
  auto usecs = static_cast<time_t>((timeout_ - std::floor(timeout_)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  auto res = cli.Post(path_, body, "application/json");
  if (!res) throw Error(ErrorCode::Transport, url_ + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::Transport, url_ + ": HTTP " + std::to_string(res->status));
  }
  return res->body;
}

HttpPolicyClient::HttpPolicyClient(std::string url, double timeout_seconds) : endpoint_(std::move(url), timeout_seconds) {}

std::string HttpPolicyClient::respond(const PromptContext& ctx, std::uint64_t seed) const {
  auto doc = io::prompt_context_to_json(ctx);
  doc["seed"] = seed;
  return endpoint_.post(doc.dump());
}

HttpAnnotatorClient::HttpAnnotatorClient(std::string url, double timeout_seconds)
    : endpoint_(std::move(url), timeout_seconds) {}

Annotation HttpAnnotatorClient::annotate(const PromptContext& ctx, const std::optional<Action>& next_action,
                                         Language language, std::uint64_t seed) const {
  nlohmann::json req{{"context", io::prompt_context_to_json(ctx)},
                     {"next_action", next_action ? nlohmann::json(serialize_action(*next_action)) : nlohmann::json()},
                     {"language", std::string(to_string(language))},
                     {"seed", seed}};
  std::string body;
  try {
    body = endpoint_.post(req.dump());
  } catch (const Error& e) {
    throw Error(ErrorCode::AnnotatorFailure, e.what());
  }
  if (body.empty()) throw Error(ErrorCode::AnnotatorFailure, "annotator returned an empty thought");
  return {body, std::nullopt};
}

HttpScorerClient::HttpScorerClient(std::string url, double timeout_seconds) : endpoint_(std::move(url), timeout_seconds) {}

double HttpScorerClient::score(const std::string& instruction, const Trace& trace) const {
  nlohmann::json req{{"instruction", instruction}, {"trace", io::trace_to_json(trace)}};
  try {
    auto res = nlohmann::json::parse(endpoint_.post(req.dump()));
    return res.at("score").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ScorerFailure, std::string("scorer response: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ScorerFailure, e.what());
  }
}

}  // namespace guiagent
