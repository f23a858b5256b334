#include "guiagent/review_api.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "guiagent/filter_pipeline.hpp"
#include "guiagent/reflection.hpp"
#include "guiagent/replay.hpp"
#include "guiagent/trace_io.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(QueueStatus s) noexcept {
  switch (s) {
    case QueueStatus::Pending: return "pending";
    case QueueStatus::Annotated: return "annotated";
    case QueueStatus::Approved: return "approved";
    case QueueStatus::Rejected: return "rejected";
  }
  return "pending";
}

std::optional<QueueStatus> queue_status_from_string(std::string_view s) noexcept {
  for (auto q : {QueueStatus::Pending, QueueStatus::Annotated, QueueStatus::Approved, QueueStatus::Rejected}) {
    if (to_string(q) == s) return q;
  }
  return std::nullopt;
}

namespace {

ApiResponse error_response(int status, std::string message) {
  return {status, json{{"error", std::move(message)}}, std::nullopt};
}

ApiResponse field_error(std::string field, ErrorCode code, std::string message) {
  return {422,
          json{{"errors", json::array({json{{"field", std::move(field)},
                                            {"code", std::string(to_string(code))},
                                            {"message", std::move(message)}}})}},
          std::nullopt};
}

std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string seq_name(std::size_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08zu.json", seq);
  return buf;
}

QueueStatus fold_status(const std::vector<json>& events) {
  QueueStatus s = QueueStatus::Pending;
  for (const auto& e : events) {
    if (e["event"] == "annotation") {
      if (s == QueueStatus::Pending) s = QueueStatus::Annotated;
    } else if (e["event"] == "status") {
      s = *queue_status_from_string(e["to"].get<std::string>());
    }
  }
  return s;
}

}  // namespace

ReviewService::ReviewService(std::string store_dir, TaskRegistry registry)
    : store_(std::move(store_dir)), registry_(std::move(registry)) {}

std::vector<json> ReviewService::events(const std::string& trace_id) const {
  std::vector<json> out;
  auto dir = fs::path(store_.root()) / "review" / trace_id;
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(json::parse(read_file(f.string())));
  return out;
}

bool ReviewService::append_event(const std::string& trace_id, std::size_t seq, const json& event) {
  auto path = fs::path(store_.root()) / "review" / trace_id / seq_name(seq);
  return write_file_exclusive(path.string(), event.dump(2) + "\n");
}

QueueStatus ReviewService::status_of(const std::string& trace_id) const { return fold_status(events(trace_id)); }

ApiResponse ReviewService::list_traces(const std::map<std::string, std::string>& query) const {
  std::optional<QueueStatus> filter;
  int page = 0;
  int page_size = 20;
  for (const auto& [k, v] : query) {
    if (k == "status") {
      if (v.empty()) continue;
      filter = queue_status_from_string(v);
      if (!filter) return error_response(400, "unknown status '" + v + "'");
    } else if (k == "page") {
      auto p = parse_int(v);
      if (!p || *p < 0) return error_response(400, "page must be a non-negative integer");
      page = *p;
    } else if (k == "page_size") {
      auto p = parse_int(v);
      if (!p || *p < 1 || *p > kMaxPageSize) {
        return error_response(400, "page_size must be in 1.." + std::to_string(kMaxPageSize));
      }
      page_size = *p;
    } else {
      return error_response(400, "unknown parameter '" + k + "'");
    }
  }
  json items = json::array();
  std::size_t total = 0;
  auto begin = static_cast<std::size_t>(page) * static_cast<std::size_t>(page_size);
  for (const auto& id : store_.list_ids()) {
    auto status = status_of(id);
    if (filter && status != *filter) continue;
    if (total >= begin && items.size() < static_cast<std::size_t>(page_size)) {
      Trace t = store_.load(id);
      items.push_back({{"trace_id", id},
                       {"instruction", t.instruction},
                       {"platform", std::string(to_string(t.platform))},
                       {"steps", t.steps.size()},
                       {"termination", std::string(to_string(t.termination))},
                       {"status", std::string(to_string(status))}});
    }
    ++total;
  }
  return {200, json{{"page", page}, {"page_size", page_size}, {"total", total}, {"items", std::move(items)}},
          std::nullopt};
}

ApiResponse ReviewService::get_trace(const std::string& trace_id) const {
  if (!store_.contains(trace_id)) return error_response(404, "no trace " + trace_id);
  auto record = store_.load_record(trace_id);
  Trace t = io::trace_from_record(record);
  json som = json::array();
  for (const auto& s : t.steps) {
    json markers = json::array();
    for (const auto& m : render_som(s.observation).second.markers) {
      markers.push_back({{"label", m.label}, {"element_id", m.element_id}});
    }
    som.push_back({{"step_index", s.index}, {"markers", std::move(markers)}});
  }
  SimEnv env(registry_);
  return {200,
          json{{"record", json::parse(record)},
               {"som", std::move(som)},
               {"verified", replay_verifies(env, t)},
               {"status", std::string(to_string(status_of(trace_id)))}},
          std::nullopt};
}

ApiResponse ReviewService::post_annotation(const std::string& trace_id, const std::string& body) {
  if (!store_.contains(trace_id)) return error_response(404, "no trace " + trace_id);
  Trace t = store_.load(trace_id);
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return field_error("body", ErrorCode::Syntax, e.what());
  }
  if (!j.is_object()) return field_error("body", ErrorCode::Syntax, "expected an object");
  if (!j.contains("trace_id")) j["trace_id"] = trace_id;
  if (j["trace_id"] != trace_id) return field_error("trace_id", ErrorCode::Precondition, "does not match the path");
  auto type = j.value("type", std::string());

  json stored;
  if (type == "review") {
    ReviewAnnotation ann;
    try {
      ann = review_annotation_from_json(j);
    } catch (const Error& e) {
      return field_error("body", e.code(), e.what());
    }
    if (ann.verdict == FilterDecision::Truncate &&
        (ann.error_step < 0 || ann.error_step >= static_cast<int>(t.steps.size()))) {
      return field_error("error_step", ErrorCode::IndexOutOfBounds,
                         "error_step must be in [0, " + std::to_string(t.steps.size()) + ")");
    }
    if (ann.error_step < 0) return field_error("error_step", ErrorCode::IndexOutOfBounds, "must be >= 0");
    stored = review_annotation_to_json(ann);
  } else if (type == "correction") {
    if (j.contains("action") && j["action"].is_string()) {
      try {
        parse_action(j["action"].get<std::string>(), PlatformProfile(t.platform));
      } catch (const Error& e) {
        return field_error("action", e.code(), e.what());
      }
    }
    Correction c;
    try {
      c = correction_from_json(j, t.platform);
      validate_correction(t, c);
    } catch (const Error& e) {
      std::string field = "body";
      if (e.code() == ErrorCode::IndexOutOfBounds) field = "step_index";
      if (e.code() == ErrorCode::IdenticalPair) field = "action";
      return field_error(field, e.code(), e.what());
    }
    stored = correction_to_json(c);
  } else {
    return field_error("type", ErrorCode::CorruptRecord, "type must be 'review' or 'correction'");
  }

  std::lock_guard lock(write_mu_);
  for (int attempt = 0; attempt < 16; ++attempt) {
    auto evs = events(trace_id);
    auto status = fold_status(evs);
    if (status == QueueStatus::Approved || status == QueueStatus::Rejected) {
      return error_response(409, "trace is already " + std::string(to_string(status)));
    }
    auto seq = evs.size() + 1;
    auto annotation_id = trace_id + "-" + std::to_string(seq);
    json event{{"seq", seq}, {"event", "annotation"}, {"annotation_id", annotation_id}, {"body", stored}};
    if (append_event(trace_id, seq, event)) {
      return {201, json{{"annotation_id", annotation_id}, {"status", "annotated"}}, std::nullopt};
    }
  }
  return error_response(409, "concurrent writers kept winning; retry");
}

ApiResponse ReviewService::set_status(const std::string& trace_id, const std::string& body) {
  if (!store_.contains(trace_id)) return error_response(404, "no trace " + trace_id);
  json j;
  try {
    j = json::parse(body);
    io::require_exact_keys(j, {"expected", "status"}, "status change");
  } catch (const json::exception& e) {
    return field_error("body", ErrorCode::Syntax, e.what());
  } catch (const Error& e) {
    return field_error("body", e.code(), e.what());
  }
  auto expected = j["expected"].is_string() ? queue_status_from_string(j["expected"].get<std::string>()) : std::nullopt;
  auto target = j["status"].is_string() ? queue_status_from_string(j["status"].get<std::string>()) : std::nullopt;
  if (!expected) return field_error("expected", ErrorCode::Range, "unknown status");
  if (!target) return field_error("status", ErrorCode::Range, "unknown status");
  const QueueStatus from = expected.value();
  const QueueStatus to = target.value();
  if (from != QueueStatus::Annotated || (to != QueueStatus::Approved && to != QueueStatus::Rejected)) {
    return field_error("status", ErrorCode::Precondition, "only annotated -> approved|rejected is allowed");
  }
  std::lock_guard lock(write_mu_);
  auto evs = events(trace_id);
  auto current = fold_status(evs);
  if (current != from) {
    return {409, json{{"error", "status is " + std::string(to_string(current))}, {"status", std::string(to_string(current))}},
            std::nullopt};
  }
  auto seq = evs.size() + 1;
  json event{{"seq", seq},
             {"event", "status"},
             {"from", std::string(to_string(current))},
             {"to", std::string(to_string(to))}};
  if (!append_event(trace_id, seq, event)) return error_response(409, "status changed concurrently");
  return {200, json{{"trace_id", trace_id}, {"status", std::string(to_string(to))}}, std::nullopt};
}

ApiResponse ReviewService::validate_action_text(const std::string& body) const {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return field_error("body", ErrorCode::Syntax, e.what());
  }
  if (!j.is_object() || !j.contains("action") || !j["action"].is_string()) {
    return field_error("action", ErrorCode::MissingAction, "action text required");
  }
  Platform platform = Platform::Shared;
  try {
    if (j.contains("platform")) platform = platform_from_string(j["platform"].get<std::string>());
  } catch (const std::exception& e) {
    return field_error("platform", ErrorCode::Platform, e.what());
  }
  try {
    auto a = parse_action(j["action"].get<std::string>(), PlatformProfile(platform));
    return {200, json{{"valid", true}, {"canonical", serialize_action(a)}}, std::nullopt};
  } catch (const Error& e) {
    auto r = field_error("action", e.code(), e.what());
    r.body["valid"] = false;
    return r;
  }
}

ApiResponse ReviewService::export_annotations() const {
  std::ostringstream out;
  for (const auto& id : store_.list_ids()) {
    for (const auto& e : events(id)) {
      if (e["event"] != "annotation") continue;
      json line = e["body"];
      line["annotation_id"] = e["annotation_id"];
      out << line.dump() << '\n';
    }
  }
  return {200, json(), out.str()};
}

struct ReviewServer::Impl {
  ReviewService& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(ReviewService& s) : service(s) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
      res.status = r.status;
      if (r.text) {
        res.set_content(*r.text, "application/x-ndjson");
      } else {
        res.set_content(r.body.dump(), "application/json");
      }
    };
    server.Get("/traces", [this, reply](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> q;
      for (const auto& [k, v] : req.params) q[k] = v;
      reply(res, service.list_traces(q));
    });
    server.Get(R"(/traces/([0-9a-f]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.get_trace(req.matches[1]));
    });
    server.Post(R"(/traces/([0-9a-f]+)/annotations)",
                [this, reply](const httplib::Request& req, httplib::Response& res) {
                  reply(res, service.post_annotation(req.matches[1], req.body));
                });
    server.Post(R"(/traces/([0-9a-f]+)/status)", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.set_status(req.matches[1], req.body));
    });
    server.Post("/actions/validate", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.validate_action_text(req.body));
    });
    server.Get("/annotations/export", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, service.export_annotations());
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      res.status = 500;
      res.set_content(json{{"error", what}}.dump(), "application/json");
    });
  }
};

ReviewServer::ReviewServer(ReviewService& service) : impl_(std::make_unique<Impl>(service)) {}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ReviewServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

void ReviewServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace guiagent
