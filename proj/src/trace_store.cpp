#include "guiagent/trace_store.hpp"

#include <algorithm>
#include <filesystem>

#include "guiagent/trace_io.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

namespace fs = std::filesystem;

namespace {

bool plausible_id(const std::string& id) {
  return id.size() >= 3 && std::all_of(id.begin(), id.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

}  // namespace

TraceStore::TraceStore(std::string root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(fs::path(root_) / "traces", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create store at '" + root_ + "': " + ec.message());
}

std::string TraceStore::path_for(const std::string& trace_id) const {
  if (!plausible_id(trace_id)) throw Error(ErrorCode::NotFound, "malformed trace id '" + trace_id + "'");
  return (fs::path(root_) / "traces" / trace_id.substr(0, 2) / (trace_id + ".json")).string();
}

std::string TraceStore::save(const Trace& t) {
  validate_trace(t);
  Trace copy = t;
  auto id = io::compute_trace_id(t);
  if (!copy.trace_id.empty() && copy.trace_id != id) {
    throw Error(ErrorCode::CorruptRecord, "trace id " + copy.trace_id + " does not match its content (" + id + ")");
  }
  copy.trace_id = id;
  auto record = io::trace_to_record(copy);
  auto path = path_for(id);
  if (!write_file_exclusive(path, record)) {
    if (read_file(path) != record) {
      throw Error(ErrorCode::CorruptRecord, "existing record " + id + " differs from the trace being saved");
    }
  }
  return id;
}

std::string TraceStore::load_record(const std::string& trace_id) const {
  auto path = path_for(trace_id);
  if (!fs::exists(path)) throw Error(ErrorCode::NotFound, "no trace " + trace_id);
  return read_file(path);
}

Trace TraceStore::load(const std::string& trace_id) const {
  Trace t = io::trace_from_record(load_record(trace_id));
  if (t.trace_id != trace_id) {
    throw Error(ErrorCode::CorruptRecord, "record " + trace_id + " carries id " + t.trace_id);
  }
  return t;
}

bool TraceStore::contains(const std::string& trace_id) const {
  return plausible_id(trace_id) && fs::exists(path_for(trace_id));
}

std::vector<std::string> TraceStore::list_ids() const {
  std::vector<std::string> ids;
  auto dir = fs::path(root_) / "traces";
  if (!fs::exists(dir)) return ids;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    if (p.extension() != ".json") continue;
    auto stem = p.stem().string();
    if (plausible_id(stem)) ids.push_back(stem);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<Trace> TraceStore::load_all() const {
  std::vector<Trace> out;
  for (const auto& id : list_ids()) out.push_back(load(id));
  return out;
}

void TraceStore::rebuild_index() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& id : list_ids()) {
    Trace t = load(id);
    entries.push_back({{"trace_id", id},
                       {"instruction", t.instruction},
                       {"steps", t.steps.size()},
                       {"termination", std::string(to_string(t.termination))}});
  }
  nlohmann::json doc{{"format", "trace-index"}, {"version", 1}, {"traces", std::move(entries)}};
  write_file_atomic((fs::path(root_) / "index.json").string(), doc.dump(2) + "\n");
}

}  // namespace guiagent
