#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "guiagent/task.hpp"
#include "guiagent/trace_store.hpp"

namespace guiagent {

enum class QueueStatus { Pending, Annotated, Approved, Rejected };

std::string_view to_string(QueueStatus s) noexcept;
std::optional<QueueStatus> queue_status_from_string(std::string_view s) noexcept;

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  // Set for non-JSON bodies (the annotation export).
  std::optional<std::string> text;
};

// Transport-free handlers behind the review HTTP service. Traces are only
// read; annotations and status changes are appended as numbered event files
// under <store>/review/<trace_id>/.
class ReviewService {
 public:
  explicit ReviewService(std::string store_dir, TaskRegistry registry = TaskRegistry::bundled());

  // GET /traces?status=&page=&page_size=
  ApiResponse list_traces(const std::map<std::string, std::string>& query) const;
  // GET /traces/{id}
  ApiResponse get_trace(const std::string& trace_id) const;
  // POST /traces/{id}/annotations
  ApiResponse post_annotation(const std::string& trace_id, const std::string& body);
  // POST /traces/{id}/status, body {"expected": s, "status": t}
  ApiResponse set_status(const std::string& trace_id, const std::string& body);
  // POST /actions/validate, body {"action": text, "platform": p}
  ApiResponse validate_action_text(const std::string& body) const;
  // GET /annotations/export
  ApiResponse export_annotations() const;

  QueueStatus status_of(const std::string& trace_id) const;

  static constexpr int kMaxPageSize = 100;

 private:
  std::vector<nlohmann::json> events(const std::string& trace_id) const;
  bool append_event(const std::string& trace_id, std::size_t seq, const nlohmann::json& event);

  TraceStore store_;
  TaskRegistry registry_;
  std::mutex write_mu_;
};

// Serves ReviewService over HTTP in a background thread.
class ReviewServer {
 public:
  explicit ReviewServer(ReviewService& service);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int start(const std::string& host, int port);
  // Blocks serving on host:port until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace guiagent
