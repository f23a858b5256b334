#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guiagent/action.hpp"
#include "guiagent/observation.hpp"
#include "guiagent/task.hpp"

namespace guiagent::detail {

struct OracleMove {
  Action action;
  std::optional<NormBox> target_box;
  std::string intent;  // short imperative phrase, e.g. "click the Submit button"
};

// A mock application: a finite state machine whose whole state is visible
// through elements(). Event handlers receive the id of the element hit.
class App {
 public:
  virtual ~App() = default;

  virtual std::unique_ptr<App> clone() const = 0;
  virtual ScreenDims screen() const = 0;
  virtual std::vector<Element> elements() const = 0;
  virtual std::string screen_name() const = 0;

  virtual void on_click(const std::string&) {}
  virtual void on_double_click(const std::string&) {}
  virtual void on_right_click(const std::string&) {}
  virtual void on_long_press(const std::string&) {}
  virtual void on_drag(const std::string*, const std::string*) {}
  virtual void on_scroll(const std::string*, ScrollDirection) {}
  virtual void on_type(const std::string&) {}
  virtual void on_hotkey(const std::string&) {}
  virtual void on_back() {}
  virtual void on_home() {}
  virtual void on_enter() {}

  virtual bool goal_satisfied() const = 0;
  // Next move on a shortest known path to the goal; nullopt when the goal is
  // unreachable from the current state. Undefined once the goal holds.
  virtual std::optional<OracleMove> oracle() const = 0;
};

// Throws UnknownApp or UnknownGoal.
std::unique_ptr<App> make_app(const Task& task);

// Routes an action to the app: point actions are hit-tested against the
// current elements, everything that hits nothing is a no-op.
void dispatch(App& app, const Action& action);

}  // namespace guiagent::detail
