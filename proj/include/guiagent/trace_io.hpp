#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "guiagent/agent_loop.hpp"
#include "guiagent/task.hpp"
#include "guiagent/trace.hpp"

// JSON mappings for the on-disk and on-the-wire documents. Parsers are strict:
// unknown or missing fields raise CorruptRecord.
namespace guiagent::io {

inline constexpr int kTraceSchemaVersion = 1;

nlohmann::json element_to_json(const Element& e);
Element element_from_json(const nlohmann::json& j);

nlohmann::json observation_to_json(const Observation& o);
// Recomputes screen_text and digest and rejects records whose stored values disagree.
Observation observation_from_json(const nlohmann::json& j);

nlohmann::json trace_to_json(const Trace& t);
Trace trace_from_json(const nlohmann::json& j);

// Canonical record text: sorted keys, two-space indent, trailing newline.
std::string trace_to_record(const Trace& t);
Trace trace_from_record(std::string_view text);

// Content address of a trace: hash of its canonical record with an empty id.
std::string compute_trace_id(const Trace& t);

nlohmann::json task_to_json(const Task& t);
Task task_from_json(const nlohmann::json& j);

// The document a policy endpoint receives.
nlohmann::json prompt_context_to_json(const PromptContext& ctx);
PromptContext prompt_context_from_json(const nlohmann::json& j);

// Strict field check helper shared by the document parsers.
void require_exact_keys(const nlohmann::json& j, std::initializer_list<std::string_view> keys,
                        std::string_view what);

}  // namespace guiagent::io
