#include "guiagent/sim_env.hpp"

#include <cstdio>
#include <set>

#include "guiagent/util.hpp"
#include "sim_apps.hpp"

namespace guiagent {

// --------------------------------------------------------- observation ----

namespace {

constexpr std::array<std::string_view, 6> kElementTypeNames = {
    "button", "text_field", "checkbox", "label", "icon", "list_item",
};

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string render_line(const Element& e) {
  std::string line(to_string(e.type));
  line += ' ';
  line += e.id;
  line += " \"";
  line += e.text;
  line += "\" [";
  line += fixed4(e.box.x0) + ", " + fixed4(e.box.y0) + ", " + fixed4(e.box.x1) + ", " + fixed4(e.box.y1);
  line += ']';
  if (!e.state.empty()) {
    line += " {";
    bool first = true;
    for (const auto& [k, v] : e.state) {
      if (!first) line += ", ";
      first = false;
      line += k + "=" + v;
    }
    line += '}';
  }
  return line;
}

}  // namespace

std::string_view to_string(ElementType t) noexcept {
  return kElementTypeNames[static_cast<std::size_t>(t)];
}

ElementType element_type_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kElementTypeNames.size(); ++i) {
    if (kElementTypeNames[i] == s) return static_cast<ElementType>(i);
  }
  throw Error(ErrorCode::CorruptRecord, "unknown element type '" + std::string(s) + "'");
}

std::string render_screen_text(const std::vector<Element>& elements) {
  std::string out;
  for (const auto& e : elements) {
    out += render_line(e);
    out += '\n';
  }
  return out;
}

std::string compute_digest(ScreenDims screen, const std::vector<Element>& elements) {
  std::string canon = std::to_string(screen.width) + "x" + std::to_string(screen.height);
  for (const auto& e : elements) {
    canon += '\x1e';
    canon += e.id;
    canon += '\x1f';
    canon += to_string(e.type);
    canon += '\x1f';
    canon += exact(e.box.x0) + "," + exact(e.box.y0) + "," + exact(e.box.x1) + "," + exact(e.box.y1);
    canon += '\x1f';
    canon += e.text;
    for (const auto& [k, v] : e.state) {
      canon += '\x1f';
      canon += k;
      canon += '=';
      canon += v;
    }
  }
  return to_hex(fnv1a64(canon));
}

void validate_elements(const std::vector<Element>& elements) {
  std::set<std::string_view> ids;
  for (const auto& e : elements) {
    if (e.id.empty()) throw Error(ErrorCode::CorruptRecord, "element with empty id");
    if (!ids.insert(e.id).second) {
      throw Error(ErrorCode::CorruptRecord, "duplicate element id '" + e.id + "'");
    }
    if (!e.box.valid()) throw Error(ErrorCode::CorruptRecord, "invalid box on element '" + e.id + "'");
  }
}

Observation Observation::make(ScreenDims screen, std::vector<Element> elements) {
  Observation obs;
  obs.screen = screen;
  obs.screen_text = render_screen_text(elements);
  obs.digest = compute_digest(screen, elements);
  obs.elements = std::move(elements);
  return obs;
}

const Element* Observation::find(std::string_view id) const noexcept {
  for (const auto& e : elements) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const Element* Observation::hit_test(const NormPoint& p) const noexcept {
  for (auto it = elements.rbegin(); it != elements.rend(); ++it) {
    if (it->box.contains(p)) return &*it;
  }
  return nullptr;
}

std::pair<Observation, SomOverlay> render_som(const Observation& obs) {
  Observation marked = obs;
  SomOverlay overlay;
  marked.screen_text.clear();
  for (std::size_t i = 0; i < obs.elements.size(); ++i) {
    auto label = std::to_string(i + 1);
    marked.screen_text += "[" + label + "] " + render_line(obs.elements[i]) + "\n";
    overlay.markers.push_back({std::move(label), obs.elements[i].id});
  }
  return {std::move(marked), std::move(overlay)};
}

// -------------------------------------------------------------- SimEnv ----

namespace {

constexpr int kOracleHorizon = 64;

std::optional<int> oracle_distance(const detail::App& app) {
  auto sim = app.clone();
  for (int n = 0; n <= kOracleHorizon; ++n) {
    if (sim->goal_satisfied()) return n;
    auto move = sim->oracle();
    if (!move) return std::nullopt;
    detail::dispatch(*sim, move->action);
  }
  return std::nullopt;
}

std::string thought_for(ReasoningPattern pattern, const std::string& instruction,
                        const std::string& intent) {
  switch (pattern) {
    case ReasoningPattern::TaskDecomposition:
      return "To complete \"" + instruction + "\" I will work through it in smaller steps; first, " +
             intent + ".";
    case ReasoningPattern::Reflection:
      return "My last action set the task back, so I need to recover: " + intent + ".";
    case ReasoningPattern::TrialAndError:
      return "What I need is not on screen yet; I will " + intent + " and check the result.";
    case ReasoningPattern::MilestoneRecognition:
      return "That part is done and the screen has moved on; next, " + intent + ".";
    case ReasoningPattern::LongTermConsistency:
      break;
  }
  return "Keeping the goal \"" + instruction + "\" in view, I will " + intent + ".";
}

}  // namespace

std::vector<std::string> bundled_apps() { return {"form", "settings", "files", "browser"}; }

SimEnv::SimEnv(TaskRegistry registry) : registry_(std::move(registry)) {}
SimEnv::~SimEnv() = default;
SimEnv::SimEnv(SimEnv&&) noexcept = default;
SimEnv& SimEnv::operator=(SimEnv&&) noexcept = default;

Observation SimEnv::reset(const Task& task) {
  auto app = detail::make_app(task);
  task_ = task;
  app_ = std::move(app);
  previous_app_.reset();
  previous_screen_ = app_->screen_name();
  actions_applied_ = 0;
  refresh_observation();
  return observation_;
}

Observation SimEnv::reset(std::string_view task_id) { return reset(registry_.get(task_id)); }

Observation SimEnv::apply_action(const Action& action) {
  require_reset();
  previous_app_ = app_->clone();
  previous_screen_ = app_->screen_name();
  detail::dispatch(*app_, action);
  ++actions_applied_;
  refresh_observation();
  return observation_;
}

const Observation& SimEnv::observation() const {
  require_reset();
  return observation_;
}

bool SimEnv::check_goal() const {
  require_reset();
  return app_->goal_satisfied();
}

std::optional<int> SimEnv::remaining_oracle_steps() const {
  require_reset();
  return oracle_distance(*app_);
}

OracleStep SimEnv::oracle_action() const {
  require_reset();
  if (app_->goal_satisfied()) {
    throw Error(ErrorCode::Precondition, "goal already reached for task '" + task_->task_id + "'");
  }
  auto move = app_->oracle();
  if (!move) throw Error(ErrorCode::NoOracle, "no scripted solution from the current state");

  ReasoningPattern pattern = ReasoningPattern::LongTermConsistency;
  if (actions_applied_ == 0 || !previous_app_) {
    pattern = ReasoningPattern::TaskDecomposition;
  } else {
    auto before = oracle_distance(*previous_app_);
    auto now = oracle_distance(*app_);
    bool regressed = now && (!before || *now > *before);
    if (regressed) {
      pattern = ReasoningPattern::Reflection;
    } else if (move->action.kind == ActionKind::Scroll) {
      pattern = ReasoningPattern::TrialAndError;
    } else if (before && now && *now < *before && previous_screen_ != app_->screen_name()) {
      pattern = ReasoningPattern::MilestoneRecognition;
    }
  }
  if (move->action.kind == ActionKind::Scroll && pattern == ReasoningPattern::LongTermConsistency) {
    pattern = ReasoningPattern::TrialAndError;
  }
  return OracleStep{thought_for(pattern, task_->instruction, move->intent), pattern, move->action,
                    move->target_box};
}

const Task& SimEnv::task() const {
  require_reset();
  return *task_;
}

void SimEnv::require_reset() const {
  if (!app_) throw Error(ErrorCode::Precondition, "environment used before reset");
}

void SimEnv::refresh_observation() {
  observation_ = Observation::make(app_->screen(), app_->elements());
}

}  // namespace guiagent
