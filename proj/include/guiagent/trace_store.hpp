#pragma once

#include <string>
#include <vector>

#include "guiagent/trace.hpp"

namespace guiagent {

// Directory of canonical trace records, one file per trace under
// traces/<id[0:2]>/<id>.json. Writes are atomic and never replace an
// existing record; several processes may save into the same store.
class TraceStore {
 public:
  explicit TraceStore(std::string root);

  // Fills in the content-addressed id when empty and returns it. Saving the
  // same trace twice is a no-op. Throws CorruptRecord when the given id does
  // not match the content.
  std::string save(const Trace& t);
  Trace load(const std::string& trace_id) const;  // NotFound
  // Stored record bytes, exactly as on disk.
  std::string load_record(const std::string& trace_id) const;
  bool contains(const std::string& trace_id) const;

  // Sorted ids found by scanning the directory.
  std::vector<std::string> list_ids() const;
  std::vector<Trace> load_all() const;
  // Rewrites index.json from a directory scan.
  void rebuild_index() const;

  const std::string& root() const noexcept { return root_; }
  std::string path_for(const std::string& trace_id) const;

 private:
  std::string root_;
};

}  // namespace guiagent
