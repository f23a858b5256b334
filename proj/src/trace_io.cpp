#include "guiagent/trace_io.hpp"

#include <algorithm>
#include <set>

#include "guiagent/util.hpp"

namespace guiagent::io {

using nlohmann::json;

namespace {

[[noreturn]] void corrupt(std::string_view what, std::string_view detail) {
  throw Error(ErrorCode::CorruptRecord, std::string(what) + ": " + std::string(detail));
}

template <typename T>
T get_as(const json& j, std::string_view key, std::string_view what) {
  try {
    return j.at(std::string(key)).get<T>();
  } catch (const json::exception& e) {
    corrupt(what, "field '" + std::string(key) + "': " + e.what());
  }
}

std::optional<std::string> optional_string(const json& j, std::string_view key, std::string_view what) {
  const auto& v = j.at(std::string(key));
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) corrupt(what, "field '" + std::string(key) + "' must be a string or null");
  return v.get<std::string>();
}

json nullable(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

void require_exact_keys(const json& j, std::initializer_list<std::string_view> keys, std::string_view what) {
  if (!j.is_object()) corrupt(what, "expected an object");
  for (auto k : keys) {
    if (!j.contains(std::string(k))) corrupt(what, "missing field '" + std::string(k) + "'");
  }
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      corrupt(what, "unknown field '" + k + "'");
    }
  }
}

json element_to_json(const Element& e) {
  return json{{"id", e.id},
              {"type", std::string(to_string(e.type))},
              {"box", {e.box.x0, e.box.y0, e.box.x1, e.box.y1}},
              {"text", e.text},
              {"state", e.state}};
}

Element element_from_json(const json& j) {
  require_exact_keys(j, {"id", "type", "box", "text", "state"}, "element");
  Element e;
  e.id = get_as<std::string>(j, "id", "element");
  e.type = element_type_from_string(get_as<std::string>(j, "type", "element"));
  auto box = get_as<std::vector<double>>(j, "box", "element");
  if (box.size() != 4) corrupt("element", "box must have 4 numbers");
  e.box = {box[0], box[1], box[2], box[3]};
  e.text = get_as<std::string>(j, "text", "element");
  e.state = get_as<std::map<std::string, std::string>>(j, "state", "element");
  return e;
}

json observation_to_json(const Observation& o) {
  json els = json::array();
  for (const auto& e : o.elements) els.push_back(element_to_json(e));
  return json{{"screen", {{"width", o.screen.width}, {"height", o.screen.height}}},
              {"elements", std::move(els)},
              {"screen_text", o.screen_text}};
}

Observation observation_from_json(const json& j) {
  require_exact_keys(j, {"screen", "elements", "screen_text"}, "observation");
  const auto& screen = j.at("screen");
  require_exact_keys(screen, {"width", "height"}, "observation.screen");
  ScreenDims dims{get_as<int>(screen, "width", "screen"), get_as<int>(screen, "height", "screen")};
  std::vector<Element> els;
  if (!j.at("elements").is_array()) corrupt("observation", "elements must be an array");
  for (const auto& e : j.at("elements")) els.push_back(element_from_json(e));
  validate_elements(els);
  auto obs = Observation::make(dims, std::move(els));
  if (obs.screen_text != get_as<std::string>(j, "screen_text", "observation")) {
    corrupt("observation", "screen_text does not match elements");
  }
  return obs;
}

json trace_to_json(const Trace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    steps.push_back(json{{"index", s.index},
                         {"observation_digest", s.observation.digest},
                         {"observation", observation_to_json(s.observation)},
                         {"thought", nullable(s.thought)},
                         {"action", serialize_action(s.action)},
                         {"raw", s.raw}});
  }
  return json{{"schema_version", kTraceSchemaVersion},
              {"trace_id", t.trace_id},
              {"instruction", t.instruction},
              {"platform", std::string(to_string(t.platform))},
              {"steps", std::move(steps)},
              {"termination", std::string(to_string(t.termination))},
              {"metadata", t.metadata}};
}

Trace trace_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version") || !j.at("schema_version").is_number_integer()) {
    corrupt("trace", "missing integer schema_version");
  }
  auto version = j.at("schema_version").get<long long>();
  if (version != kTraceSchemaVersion) {
    throw Error(ErrorCode::SchemaVersionMismatch, "trace schema_version " + std::to_string(version) +
                                                      ", expected " + std::to_string(kTraceSchemaVersion));
  }
  require_exact_keys(j, {"schema_version", "trace_id", "instruction", "platform", "steps", "termination", "metadata"},
                     "trace");
  Trace t;
  t.trace_id = get_as<std::string>(j, "trace_id", "trace");
  t.instruction = get_as<std::string>(j, "instruction", "trace");
  try {
    t.platform = platform_from_string(get_as<std::string>(j, "platform", "trace"));
  } catch (const Error& e) {
    corrupt("trace", e.what());
  }
  t.termination = termination_from_string(get_as<std::string>(j, "termination", "trace"));
  t.metadata = get_as<std::map<std::string, std::string>>(j, "metadata", "trace");
  const PlatformProfile profile(t.platform);
  if (!j.at("steps").is_array()) corrupt("trace", "steps must be an array");
  for (const auto& sj : j.at("steps")) {
    require_exact_keys(sj, {"index", "observation_digest", "observation", "thought", "action", "raw"}, "step");
    Step s;
    s.index = get_as<int>(sj, "index", "step");
    s.observation = observation_from_json(sj.at("observation"));
    if (s.observation.digest != get_as<std::string>(sj, "observation_digest", "step")) {
      corrupt("step", "observation_digest does not match observation");
    }
    s.thought = optional_string(sj, "thought", "step");
    try {
      s.action = parse_action(get_as<std::string>(sj, "action", "step"), profile);
    } catch (const Error& e) {
      corrupt("step", e.what());
    }
    s.raw = get_as<std::string>(sj, "raw", "step");
    t.steps.push_back(std::move(s));
  }
  validate_trace(t);
  return t;
}

std::string trace_to_record(const Trace& t) {
  return trace_to_json(t).dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

Trace trace_from_record(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    corrupt("trace record", e.what());
  }
  return trace_from_json(j);
}

std::string compute_trace_id(const Trace& t) {
  Trace copy = t;
  copy.trace_id.clear();
  return to_hex(fnv1a64(trace_to_record(copy)));
}

json task_to_json(const Task& t) {
  return json{{"task_id", t.task_id},     {"app", t.app},
              {"instruction", t.instruction}, {"params", t.params},
              {"seed", t.seed},           {"goal", t.goal},
              {"platform", std::string(to_string(t.platform))}, {"oracle_steps", t.oracle_steps}};
}

Task task_from_json(const json& j) {
  require_exact_keys(j, {"task_id", "app", "instruction", "params", "seed", "goal", "platform", "oracle_steps"},
                     "task");
  Task t;
  t.task_id = get_as<std::string>(j, "task_id", "task");
  t.app = get_as<std::string>(j, "app", "task");
  t.instruction = get_as<std::string>(j, "instruction", "task");
  t.params = get_as<std::map<std::string, std::string>>(j, "params", "task");
  t.seed = get_as<std::uint64_t>(j, "seed", "task");
  t.goal = get_as<std::string>(j, "goal", "task");
  try {
    t.platform = platform_from_string(get_as<std::string>(j, "platform", "task"));
  } catch (const Error& e) {
    corrupt("task", e.what());
  }
  t.oracle_steps = get_as<int>(j, "oracle_steps", "task");
  return t;
}

json prompt_context_to_json(const PromptContext& ctx) {
  json history = json::array();
  for (const auto& h : ctx.history) {
    history.push_back(json{{"thought", nullable(h.thought)}, {"action", serialize_action(h.action)}});
  }
  json observations = json::array();
  for (const auto& o : ctx.observations) {
    observations.push_back(json{{"step_index", o.step_index},
                                {"digest", o.observation.digest},
                                {"observation", observation_to_json(o.observation)}});
  }
  return json{{"instruction", ctx.instruction},
              {"platform", std::string(to_string(ctx.platform))},
              {"window", ctx.window},
              {"history", std::move(history)},
              {"observations", std::move(observations)}};
}

PromptContext prompt_context_from_json(const json& j) {
  require_exact_keys(j, {"instruction", "platform", "window", "history", "observations"}, "prompt context");
  PromptContext ctx;
  ctx.instruction = get_as<std::string>(j, "instruction", "prompt context");
  try {
    ctx.platform = platform_from_string(get_as<std::string>(j, "platform", "prompt context"));
  } catch (const Error& e) {
    corrupt("prompt context", e.what());
  }
  ctx.window = get_as<int>(j, "window", "prompt context");
  const PlatformProfile profile(ctx.platform);
  for (const auto& h : j.at("history")) {
    require_exact_keys(h, {"thought", "action"}, "history entry");
    HistoryEntry e;
    e.thought = optional_string(h, "thought", "history entry");
    try {
      e.action = parse_action(get_as<std::string>(h, "action", "history entry"), profile);
    } catch (const Error& err) {
      corrupt("history entry", err.what());
    }
    ctx.history.push_back(std::move(e));
  }
  for (const auto& o : j.at("observations")) {
    require_exact_keys(o, {"step_index", "digest", "observation"}, "windowed observation");
    WindowedObservation w;
    w.step_index = get_as<int>(o, "step_index", "windowed observation");
    w.observation = observation_from_json(o.at("observation"));
    if (w.observation.digest != get_as<std::string>(o, "digest", "windowed observation")) {
      corrupt("windowed observation", "digest does not match observation");
    }
    ctx.observations.push_back(std::move(w));
  }
  if (ctx.observations.empty()) corrupt("prompt context", "needs at least the current observation");
  return ctx;
}

}  // namespace guiagent::io
