#include "guiagent/external_adapters.hpp"

#include <cmath>
#include <cstdlib>
#include <map>

#include "guiagent/trace_io.hpp"

namespace guiagent {

using nlohmann::json;

namespace {

[[noreturn]] void unmappable(std::string_view schema, std::string_view verb) {
  throw Error(ErrorCode::UnmappableAction,
              std::string(schema) + ": verb '" + std::string(verb) + "' has no unified equivalent");
}

ScreenDims screen_of(const json& step, const json& record) {
  const json* src = nullptr;
  if (step.contains("screen")) {
    src = &step["screen"];
  } else if (record.contains("screen")) {
    src = &record["screen"];
  }
  if (src == nullptr || !src->is_object() || !src->contains("width") || !src->contains("height")) {
    throw Error(ErrorCode::MissingScreenDims, "step has no screen dimensions");
  }
  ScreenDims d{src->at("width").get<int>(), src->at("height").get<int>()};
  if (d.width <= 0 || d.height <= 0) throw Error(ErrorCode::MissingScreenDims, "screen dimensions must be positive");
  return d;
}

NormPoint pixel_arg(const json& step, const char* key, ScreenDims dims) {
  if (!step.contains(key)) throw Error(ErrorCode::Arity, std::string("missing '") + key + "'");
  auto xy = step.at(key).get<std::vector<long>>();
  if (xy.size() != 2) throw Error(ErrorCode::Arity, std::string("'") + key + "' needs two coordinates");
  return normalize_point({xy[0], xy[1]}, dims);
}

Step make_step(int index, Observation obs, const json& src, Action action) {
  Step s;
  s.index = index;
  s.observation = std::move(obs);
  if (src.contains("thought") && src["thought"].is_string()) s.thought = src["thought"].get<std::string>();
  s.action = std::move(action);
  s.raw = src.dump();
  return s;
}

const json& steps_of(const json& record) {
  if (!record.is_object() || !record.contains("steps") || !record["steps"].is_array()) {
    throw Error(ErrorCode::CorruptRecord, "external record needs a 'steps' array");
  }
  return record["steps"];
}

class MobileTaps final : public ExternalSchemaAdapter {
 public:
  std::string schema_id() const override { return "mobile_taps"; }
  Platform platform() const override { return Platform::Mobile; }

  std::vector<Step> convert(const json& record) const override {
    static const std::map<std::string, ActionKind> nullary = {
        {"press_back", ActionKind::PressBack},   {"back", ActionKind::PressBack},
        {"press_home", ActionKind::PressHome},   {"home", ActionKind::PressHome},
        {"press_enter", ActionKind::PressEnter}, {"enter", ActionKind::PressEnter},
        {"wait", ActionKind::Wait},              {"done", ActionKind::Finished},
        {"finish", ActionKind::Finished},        {"call_user", ActionKind::CallUser},
        {"infeasible", ActionKind::CallUser},
    };
    const PlatformProfile profile(platform());
    std::vector<Step> out;
    for (const auto& src : steps_of(record)) {
      auto verb = src.value("verb", std::string());
      auto dims = screen_of(src, record);
      Action a;
      if (verb == "tap") {
        a = Action::click(pixel_arg(src, "px", dims));
      } else if (verb == "long_press") {
        a = Action::long_press(pixel_arg(src, "px", dims));
      } else if (verb == "swipe") {
        auto from = pixel_arg(src, "from", dims);
        auto to = pixel_arg(src, "to", dims);
        double dx = to.x - from.x;
        double dy = to.y - from.y;
        ScrollDirection d;
        if (std::abs(dy) >= std::abs(dx)) {
          d = dy < 0 ? ScrollDirection::Down : ScrollDirection::Up;
        } else {
          d = dx < 0 ? ScrollDirection::Right : ScrollDirection::Left;
        }
        a = Action::scroll(from, d);
      } else if (verb == "drag") {
        a = Action::drag(pixel_arg(src, "from", dims), pixel_arg(src, "to", dims));
      } else if (verb == "type") {
        a = Action::type(src.value("text", std::string()));
      } else if (auto it = nullary.find(verb); it != nullary.end()) {
        a = Action::nullary(it->second);
      } else {
        unmappable(schema_id(), verb);
      }
      validate_action(a, profile);
      out.push_back(make_step(static_cast<int>(out.size()), Observation::make(dims, {}), src, std::move(a)));
    }
    return out;
  }
};

ElementType web_type(const std::string& tag) {
  if (tag == "input" || tag == "textarea") return ElementType::TextField;
  if (tag == "button" || tag == "a" || tag == "link") return ElementType::Button;
  if (tag == "checkbox") return ElementType::Checkbox;
  if (tag == "img" || tag == "icon") return ElementType::Icon;
  if (tag == "li") return ElementType::ListItem;
  return ElementType::Label;
}

class WebElements final : public ExternalSchemaAdapter {
 public:
  std::string schema_id() const override { return "web_elements"; }
  Platform platform() const override { return Platform::Desktop; }

  std::vector<Step> convert(const json& record) const override {
    const PlatformProfile profile(platform());
    std::vector<Step> out;
    for (const auto& src : steps_of(record)) {
      auto op = src.value("op", std::string());
      auto dims = screen_of(src, record);
      auto elements = parse_elements(src, dims);
      auto obs = Observation::make(dims, elements);
      auto center = [&](const char* key) {
        if (!src.contains(key)) throw Error(ErrorCode::Arity, std::string("missing '") + key + "'");
        auto idx = src.at(key).get<long>();
        if (idx < 0 || idx >= static_cast<long>(elements.size())) {
          throw Error(ErrorCode::Range, "element index " + std::to_string(idx) + " out of range");
        }
        auto c = elements[static_cast<std::size_t>(idx)].box.center();
        // Snap to the grid the wire format uses.
        return NormPoint{static_cast<double>(coord_ticks(c.x)) / 1e4, static_cast<double>(coord_ticks(c.y)) / 1e4};
      };
      std::vector<Action> actions;
      if (op == "click") {
        actions.push_back(Action::click(center("element")));
      } else if (op == "dblclick") {
        actions.push_back(Action::left_double(center("element")));
      } else if (op == "right_click") {
        actions.push_back(Action::right_single(center("element")));
      } else if (op == "type") {
        if (src.contains("element")) actions.push_back(Action::click(center("element")));
        actions.push_back(Action::type(src.value("value", std::string())));
      } else if (op == "drag") {
        actions.push_back(Action::drag(center("element"), center("to_element")));
      } else if (op == "press") {
        actions.push_back(Action::hotkey(src.value("key", std::string())));
      } else if (op == "scroll") {
        auto d = scroll_direction_from_string(src.value("direction", std::string("down")));
        if (!d) throw Error(ErrorCode::Range, "unknown scroll direction");
        actions.push_back(Action::scroll({0.5, 0.5}, *d));
      } else if (op == "wait") {
        actions.push_back(Action::wait());
      } else if (op == "done") {
        actions.push_back(Action::finished());
      } else {
        unmappable(schema_id(), op);
      }
      for (auto& a : actions) {
        validate_action(a, profile);
        out.push_back(make_step(static_cast<int>(out.size()), obs, src, std::move(a)));
      }
    }
    return out;
  }

 private:
  static std::vector<Element> parse_elements(const json& src, ScreenDims dims) {
    std::vector<Element> els;
    if (!src.contains("elements")) return els;
    for (const auto& e : src["elements"]) {
      auto px = e.at("box_px").get<std::vector<double>>();
      if (px.size() != 4) throw Error(ErrorCode::CorruptRecord, "box_px needs 4 numbers");
      Element el;
      el.id = "e" + std::to_string(els.size());
      el.type = web_type(e.value("tag", std::string()));
      el.box = {px[0] / dims.width, px[1] / dims.height, px[2] / dims.width, px[3] / dims.height};
      el.text = e.value("text", std::string());
      els.push_back(std::move(el));
    }
    validate_elements(els);
    return els;
  }
};

}  // namespace

const ExternalSchemaAdapter& mobile_taps_adapter() {
  static const MobileTaps a;
  return a;
}

const ExternalSchemaAdapter& web_elements_adapter() {
  static const WebElements a;
  return a;
}

std::vector<std::string> adapter_ids() { return {"mobile_taps", "web_elements"}; }

const ExternalSchemaAdapter& find_adapter(std::string_view schema_id) {
  if (schema_id == "mobile_taps") return mobile_taps_adapter();
  if (schema_id == "web_elements") return web_elements_adapter();
  throw Error(ErrorCode::NotFound, "no adapter '" + std::string(schema_id) + "'");
}

std::vector<Step> convert_external(const json& record, const ExternalSchemaAdapter& adapter) {
  return adapter.convert(record);
}

Trace external_to_trace(const json& record, const ExternalSchemaAdapter& adapter) {
  Trace t;
  t.instruction = record.value("instruction", std::string());
  if (t.instruction.empty()) throw Error(ErrorCode::CorruptRecord, "external record needs an instruction");
  t.platform = adapter.platform();
  t.steps = adapter.convert(record);
  t.termination = Termination::Truncated;
  if (!t.steps.empty()) {
    auto k = t.steps.back().action.kind;
    if (k == ActionKind::Finished) t.termination = Termination::Finished;
    if (k == ActionKind::CallUser) t.termination = Termination::CallUser;
  }
  t.metadata["source_schema"] = adapter.schema_id();
  t.trace_id = io::compute_trace_id(t);
  return t;
}

}  // namespace guiagent
