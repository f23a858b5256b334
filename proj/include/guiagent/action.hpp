#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "guiagent/error.hpp"

namespace guiagent {

// Point in screen-fraction coordinates. Equality is defined on the 4-decimal
// grid used by the wire format, so a point survives serialization exactly.
struct NormPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const NormPoint& a, const NormPoint& b) noexcept;
};

// Quantizes a fraction to its 1e-4 grid index.
std::int64_t coord_ticks(double v) noexcept;

// Axis-aligned box in normalized coordinates; closed on all sides.
struct NormBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  NormPoint center() const noexcept { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
  bool contains(const NormPoint& p) const noexcept {
    return x0 <= p.x && p.x <= x1 && y0 <= p.y && p.y <= y1;
  }
  bool valid() const noexcept {
    return 0.0 <= x0 && x0 < x1 && x1 <= 1.0 && 0.0 <= y0 && y0 < y1 && y1 <= 1.0;
  }
  friend bool operator==(const NormBox&, const NormBox&) = default;
};

struct ScreenDims {
  int width = 0;
  int height = 0;
  friend bool operator==(const ScreenDims&, const ScreenDims&) = default;
};

struct PixelPoint {
  long x = 0;
  long y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

enum class ActionKind {
  Click,
  Drag,
  Scroll,
  Type,
  Wait,
  Finished,
  CallUser,
  Hotkey,
  LeftDouble,
  RightSingle,
  LongPress,
  PressBack,
  PressHome,
  PressEnter,
};

inline constexpr std::array<ActionKind, 14> kAllActionKinds = {
    ActionKind::Click,      ActionKind::Drag,        ActionKind::Scroll,    ActionKind::Type,
    ActionKind::Wait,       ActionKind::Finished,    ActionKind::CallUser,  ActionKind::Hotkey,
    ActionKind::LeftDouble, ActionKind::RightSingle, ActionKind::LongPress, ActionKind::PressBack,
    ActionKind::PressHome,  ActionKind::PressEnter,
};

std::string_view to_string(ActionKind kind) noexcept;
std::optional<ActionKind> action_kind_from_string(std::string_view name) noexcept;

// Number of NormPoints an action of this kind carries (0, 1 or 2).
int point_count(ActionKind kind) noexcept;
bool is_terminal(ActionKind kind) noexcept;

enum class ScrollDirection { Up, Down, Left, Right };

std::string_view to_string(ScrollDirection d) noexcept;
std::optional<ScrollDirection> scroll_direction_from_string(std::string_view s) noexcept;

// One action of the unified vocabulary. Only the fields relevant to `kind`
// are meaningful; equality ignores the rest.
struct Action {
  ActionKind kind = ActionKind::Wait;
  NormPoint start{};
  NormPoint end{};
  ScrollDirection direction = ScrollDirection::Down;
  std::string text;  // Type content or Hotkey key

  static Action click(NormPoint p) { return point_action(ActionKind::Click, p); }
  static Action left_double(NormPoint p) { return point_action(ActionKind::LeftDouble, p); }
  static Action right_single(NormPoint p) { return point_action(ActionKind::RightSingle, p); }
  static Action long_press(NormPoint p) { return point_action(ActionKind::LongPress, p); }
  static Action drag(NormPoint from, NormPoint to) {
    return {ActionKind::Drag, from, to, ScrollDirection::Down, {}};
  }
  static Action scroll(NormPoint p, ScrollDirection d) {
    return {ActionKind::Scroll, p, {}, d, {}};
  }
  static Action type(std::string content) {
    return {ActionKind::Type, {}, {}, ScrollDirection::Down, std::move(content)};
  }
  static Action hotkey(std::string_view key);
  static Action nullary(ActionKind kind) { return {kind, {}, {}, ScrollDirection::Down, {}}; }
  static Action point_action(ActionKind kind, NormPoint p) { return {kind, p, {}, ScrollDirection::Down, {}}; }
  static Action wait() { return nullary(ActionKind::Wait); }
  static Action finished() { return nullary(ActionKind::Finished); }
  static Action call_user() { return nullary(ActionKind::CallUser); }

  friend bool operator==(const Action& a, const Action& b);
};

enum class Platform { Shared, Desktop, Mobile };

std::string_view to_string(Platform p) noexcept;
Platform platform_from_string(std::string_view s);

// The set of kinds allowed on a platform: the seven shared kinds everywhere,
// plus desktop- or mobile-specific kinds.
class PlatformProfile {
 public:
  explicit PlatformProfile(Platform platform) noexcept;

  static PlatformProfile shared() { return PlatformProfile(Platform::Shared); }
  static PlatformProfile desktop() { return PlatformProfile(Platform::Desktop); }
  static PlatformProfile mobile() { return PlatformProfile(Platform::Mobile); }

  Platform platform() const noexcept { return platform_; }
  std::string_view name() const noexcept { return to_string(platform_); }
  bool allows(ActionKind kind) const noexcept;
  std::span<const ActionKind> allowed_kinds() const noexcept;

 private:
  Platform platform_;
};

// Canonical hotkey form: lowercase tokens joined by '+', modifiers first in
// the order ctrl, alt, shift, meta. Throws Syntax on empty or malformed keys.
std::string normalize_hotkey(std::string_view key);

// Throws Arity/Range/Platform when the action violates its invariants.
void validate_action(const Action& a, const PlatformProfile& profile);

Action parse_action(std::string_view text, const PlatformProfile& profile);
std::string serialize_action(const Action& a);

NormPoint normalize_point(PixelPoint px, ScreenDims dims);
PixelPoint denormalize_point(NormPoint p, ScreenDims dims);

}  // namespace guiagent
