#include "guiagent/action.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <vector>

namespace guiagent {

std::int64_t coord_ticks(double v) noexcept { return std::llround(v * 10000.0); }

bool operator==(const NormPoint& a, const NormPoint& b) noexcept {
  return coord_ticks(a.x) == coord_ticks(b.x) && coord_ticks(a.y) == coord_ticks(b.y);
}

namespace {

constexpr std::array<std::string_view, 14> kKindNames = {
    "Click",      "Drag",        "Scroll",    "Type",      "Wait",      "Finished",  "CallUser",
    "Hotkey",     "LeftDouble",  "RightSingle", "LongPress", "PressBack", "PressHome", "PressEnter",
};

constexpr std::array<ActionKind, 7> kSharedKinds = {
    ActionKind::Click, ActionKind::Drag,     ActionKind::Scroll,   ActionKind::Type,
    ActionKind::Wait,  ActionKind::Finished, ActionKind::CallUser,
};
constexpr std::array<ActionKind, 10> kDesktopKinds = {
    ActionKind::Click,    ActionKind::Drag,     ActionKind::Scroll,     ActionKind::Type,
    ActionKind::Wait,     ActionKind::Finished, ActionKind::CallUser,   ActionKind::Hotkey,
    ActionKind::LeftDouble, ActionKind::RightSingle,
};
constexpr std::array<ActionKind, 11> kMobileKinds = {
    ActionKind::Click,     ActionKind::Drag,      ActionKind::Scroll,    ActionKind::Type,
    ActionKind::Wait,      ActionKind::Finished,  ActionKind::CallUser,  ActionKind::LongPress,
    ActionKind::PressBack, ActionKind::PressHome, ActionKind::PressEnter,
};

constexpr std::array<std::string_view, 4> kModifierOrder = {"ctrl", "alt", "shift", "meta"};

bool is_space(char c) { return c == ' ' || c == '\t'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

struct RawArg {
  bool quoted = false;
  std::string text;
};

struct RawCall {
  std::string name;
  std::vector<RawArg> args;
};

// Tokenizes `Name(arg, "quoted", ...)` without interpreting argument values.
RawCall split_call(std::string_view text) {
  if (text.find_first_of("\r\n") != std::string_view::npos) {
    throw Error(ErrorCode::Syntax, "action text must be a single line");
  }
  std::string_view s = trim(text);
  std::size_t i = 0;
  auto ident_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  while (i < s.size() && ident_char(s[i])) ++i;
  if (i == 0) throw Error(ErrorCode::Syntax, "expected action name in '" + std::string(s) + "'");
  RawCall call{std::string(s.substr(0, i)), {}};
  while (i < s.size() && is_space(s[i])) ++i;
  if (i >= s.size() || s[i] != '(') {
    throw Error(ErrorCode::Syntax, "expected '(' after " + call.name);
  }
  ++i;
  auto skip_ws = [&] {
    while (i < s.size() && is_space(s[i])) ++i;
  };
  skip_ws();
  if (i < s.size() && s[i] == ')') {
    ++i;
  } else {
    while (true) {
      skip_ws();
      if (i >= s.size()) throw Error(ErrorCode::Syntax, "unterminated argument list");
      RawArg arg;
      if (s[i] == '"') {
        arg.quoted = true;
        ++i;
        bool closed = false;
        while (i < s.size()) {
          char c = s[i++];
          if (c == '"') {
            closed = true;
            break;
          }
          if (c == '\\') {
            if (i >= s.size()) break;
            char e = s[i++];
            switch (e) {
              case '"': arg.text += '"'; break;
              case '\\': arg.text += '\\'; break;
              case 'n': arg.text += '\n'; break;
              case 'r': arg.text += '\r'; break;
              default:
                throw Error(ErrorCode::Syntax, std::string("unknown escape \\") + e);
            }
          } else {
            arg.text += c;
          }
        }
        if (!closed) throw Error(ErrorCode::Syntax, "unterminated string literal");
        skip_ws();
      } else {
        std::size_t start = i;
        while (i < s.size() && s[i] != ',' && s[i] != ')' && s[i] != '"' && s[i] != '(') ++i;
        arg.text = std::string(trim(s.substr(start, i - start)));
        if (arg.text.empty()) throw Error(ErrorCode::Syntax, "empty argument");
      }
      call.args.push_back(std::move(arg));
      if (i >= s.size()) throw Error(ErrorCode::Syntax, "unterminated argument list");
      if (s[i] == ',') {
        ++i;
        continue;
      }
      if (s[i] == ')') {
        ++i;
        break;
      }
      throw Error(ErrorCode::Syntax, std::string("unexpected character '") + s[i] + "'");
    }
  }
  if (!trim(s.substr(i)).empty()) {
    throw Error(ErrorCode::Syntax, "trailing characters after ')'");
  }
  return call;
}

double parse_coordinate(const RawArg& arg, std::string_view kind) {
  if (arg.quoted) {
    throw Error(ErrorCode::Arity, std::string(kind) + " expects numeric coordinates");
  }
  double v = 0.0;
  const char* first = arg.text.data();
  const char* last = first + arg.text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec == std::errc::result_out_of_range) {
    throw Error(ErrorCode::Range, "coordinate '" + arg.text + "' out of range");
  }
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::Arity, std::string(kind) + " expects numeric coordinates, got '" +
                                      arg.text + "'");
  }
  return v;
}

void check_unit(double v, std::string_view what) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    throw Error(ErrorCode::Range, std::string(what) + " coordinate " + buf + " outside [0,1]");
  }
}

void append_coord(std::string& out, double v) {
  std::int64_t t = coord_ticks(v);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%04lld", static_cast<long long>(t / 10000),
                static_cast<long long>(t % 10000));
  out += buf;
}

void append_quoted(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
}

std::string canonical_modifier(std::string_view token) {
  if (token == "control") return "ctrl";
  if (token == "option") return "alt";
  if (token == "cmd" || token == "command" || token == "win" || token == "super") return "meta";
  return std::string(token);
}

}  // namespace

std::string_view to_string(ActionKind kind) noexcept {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<ActionKind> action_kind_from_string(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return kAllActionKinds[i];
  }
  return std::nullopt;
}

int point_count(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::Click:
    case ActionKind::LeftDouble:
    case ActionKind::RightSingle:
    case ActionKind::LongPress:
    case ActionKind::Scroll:
      return 1;
    case ActionKind::Drag:
      return 2;
    default:
      return 0;
  }
}

bool is_terminal(ActionKind kind) noexcept {
  return kind == ActionKind::Finished || kind == ActionKind::CallUser;
}

std::string_view to_string(ScrollDirection d) noexcept {
  switch (d) {
    case ScrollDirection::Up: return "up";
    case ScrollDirection::Down: return "down";
    case ScrollDirection::Left: return "left";
    case ScrollDirection::Right: return "right";
  }
  return "down";
}

std::optional<ScrollDirection> scroll_direction_from_string(std::string_view s) noexcept {
  if (s == "up") return ScrollDirection::Up;
  if (s == "down") return ScrollDirection::Down;
  if (s == "left") return ScrollDirection::Left;
  if (s == "right") return ScrollDirection::Right;
  return std::nullopt;
}

Action Action::hotkey(std::string_view key) {
  return {ActionKind::Hotkey, {}, {}, ScrollDirection::Down, normalize_hotkey(key)};
}

bool operator==(const Action& a, const Action& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ActionKind::Click:
    case ActionKind::LeftDouble:
    case ActionKind::RightSingle:
    case ActionKind::LongPress:
      return a.start == b.start;
    case ActionKind::Drag:
      return a.start == b.start && a.end == b.end;
    case ActionKind::Scroll:
      return a.start == b.start && a.direction == b.direction;
    case ActionKind::Type:
    case ActionKind::Hotkey:
      return a.text == b.text;
    default:
      return true;
  }
}

std::string_view to_string(Platform p) noexcept {
  switch (p) {
    case Platform::Shared: return "shared";
    case Platform::Desktop: return "desktop";
    case Platform::Mobile: return "mobile";
  }
  return "shared";
}

Platform platform_from_string(std::string_view s) {
  if (s == "shared") return Platform::Shared;
  if (s == "desktop") return Platform::Desktop;
  if (s == "mobile") return Platform::Mobile;
  throw Error(ErrorCode::Platform, "unknown platform '" + std::string(s) + "'");
}

PlatformProfile::PlatformProfile(Platform platform) noexcept : platform_(platform) {}

std::span<const ActionKind> PlatformProfile::allowed_kinds() const noexcept {
  switch (platform_) {
    case Platform::Desktop: return kDesktopKinds;
    case Platform::Mobile: return kMobileKinds;
    case Platform::Shared: break;
  }
  return kSharedKinds;
}

bool PlatformProfile::allows(ActionKind kind) const noexcept {
  auto kinds = allowed_kinds();
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

std::string normalize_hotkey(std::string_view key) {
  std::vector<std::string> modifiers;
  std::vector<std::string> keys;
  std::size_t pos = 0;
  while (true) {
    std::size_t plus = key.find('+', pos);
    std::string_view raw = trim(key.substr(pos, plus == std::string_view::npos ? key.npos
                                                                               : plus - pos));
    if (raw.empty()) throw Error(ErrorCode::Syntax, "empty hotkey token in '" + std::string(key) + "'");
    std::string token;
    for (char c : raw) {
      unsigned char u = static_cast<unsigned char>(c);
      if (!std::isalnum(u) && c != '_') {
        throw Error(ErrorCode::Syntax, "invalid hotkey character in '" + std::string(key) + "'");
      }
      token += static_cast<char>(std::tolower(u));
    }
    token = canonical_modifier(token);
    auto& bucket =
        std::find(kModifierOrder.begin(), kModifierOrder.end(), token) != kModifierOrder.end()
            ? modifiers
            : keys;
    if (std::find(modifiers.begin(), modifiers.end(), token) != modifiers.end() ||
        std::find(keys.begin(), keys.end(), token) != keys.end()) {
      throw Error(ErrorCode::Syntax, "duplicate hotkey token '" + token + "'");
    }
    bucket.push_back(std::move(token));
    if (plus == std::string_view::npos) break;
    pos = plus + 1;
  }
  std::string out;
  for (std::string_view m : kModifierOrder) {
    if (std::find(modifiers.begin(), modifiers.end(), m) != modifiers.end()) {
      if (!out.empty()) out += '+';
      out += m;
    }
  }
  for (const auto& k : keys) {
    if (!out.empty()) out += '+';
    out += k;
  }
  return out;
}

void validate_action(const Action& a, const PlatformProfile& profile) {
  const auto name = to_string(a.kind);
  const int points = point_count(a.kind);
  if (points >= 1) {
    check_unit(a.start.x, name);
    check_unit(a.start.y, name);
  }
  if (points == 2) {
    check_unit(a.end.x, name);
    check_unit(a.end.y, name);
  }
  if (a.kind == ActionKind::Type && a.text.empty()) {
    throw Error(ErrorCode::Arity, "Type content must be non-empty");
  }
  if (a.kind == ActionKind::Hotkey) {
    if (a.text.empty()) throw Error(ErrorCode::Arity, "Hotkey key must be non-empty");
    if (normalize_hotkey(a.text) != a.text) {
      throw Error(ErrorCode::Syntax, "Hotkey key '" + a.text + "' is not in canonical form");
    }
  }
  if (!profile.allows(a.kind)) {
    throw Error(ErrorCode::Platform, std::string(name) + " is not available on " +
                                         std::string(profile.name()));
  }
}

Action parse_action(std::string_view text, const PlatformProfile& profile) {
  RawCall call = split_call(text);
  auto kind = action_kind_from_string(call.name);
  if (!kind) throw Error(ErrorCode::UnknownAction, "unknown action '" + call.name + "'");

  auto expect_args = [&](std::size_t n) {
    if (call.args.size() != n) {
      throw Error(ErrorCode::Arity, call.name + " expects " + std::to_string(n) +
                                        " argument(s), got " + std::to_string(call.args.size()));
    }
  };

  Action a;
  a.kind = *kind;
  switch (*kind) {
    case ActionKind::Click:
    case ActionKind::LeftDouble:
    case ActionKind::RightSingle:
    case ActionKind::LongPress:
      expect_args(2);
      a.start = {parse_coordinate(call.args[0], call.name), parse_coordinate(call.args[1], call.name)};
      break;
    case ActionKind::Drag:
      expect_args(4);
      a.start = {parse_coordinate(call.args[0], call.name), parse_coordinate(call.args[1], call.name)};
      a.end = {parse_coordinate(call.args[2], call.name), parse_coordinate(call.args[3], call.name)};
      break;
    case ActionKind::Scroll: {
      expect_args(3);
      a.start = {parse_coordinate(call.args[0], call.name), parse_coordinate(call.args[1], call.name)};
      auto dir = scroll_direction_from_string(call.args[2].text);
      if (!dir) {
        throw Error(ErrorCode::Arity, "Scroll direction must be one of up, down, left, right; got '" +
                                          call.args[2].text + "'");
      }
      a.direction = *dir;
      break;
    }
    case ActionKind::Type:
      expect_args(1);
      if (!call.args[0].quoted) throw Error(ErrorCode::Arity, "Type expects a quoted string");
      a.text = call.args[0].text;
      break;
    case ActionKind::Hotkey:
      expect_args(1);
      if (call.args[0].text.empty()) throw Error(ErrorCode::Arity, "Hotkey key must be non-empty");
      a.text = normalize_hotkey(call.args[0].text);
      break;
    default:
      expect_args(0);
      break;
  }
  validate_action(a, profile);
  return a;
}

std::string serialize_action(const Action& a) {
  std::string out(to_string(a.kind));
  out += '(';
  switch (a.kind) {
    case ActionKind::Click:
    case ActionKind::LeftDouble:
    case ActionKind::RightSingle:
    case ActionKind::LongPress:
      append_coord(out, a.start.x);
      out += ", ";
      append_coord(out, a.start.y);
      break;
    case ActionKind::Drag:
      append_coord(out, a.start.x);
      out += ", ";
      append_coord(out, a.start.y);
      out += ", ";
      append_coord(out, a.end.x);
      out += ", ";
      append_coord(out, a.end.y);
      break;
    case ActionKind::Scroll:
      append_coord(out, a.start.x);
      out += ", ";
      append_coord(out, a.start.y);
      out += ", ";
      out += to_string(a.direction);
      break;
    case ActionKind::Type:
      append_quoted(out, a.text);
      break;
    case ActionKind::Hotkey:
      out += a.text;
      break;
    default:
      break;
  }
  out += ')';
  return out;
}

NormPoint normalize_point(PixelPoint px, ScreenDims dims) {
  if (dims.width <= 0 || dims.height <= 0) {
    throw Error(ErrorCode::Range, "screen dimensions must be positive");
  }
  if (px.x < 0 || px.y < 0 || px.x > dims.width || px.y > dims.height) {
    throw Error(ErrorCode::Range, "pixel (" + std::to_string(px.x) + ", " + std::to_string(px.y) +
                                      ") outside " + std::to_string(dims.width) + "x" +
                                      std::to_string(dims.height));
  }
  return {static_cast<double>(px.x) / dims.width, static_cast<double>(px.y) / dims.height};
}

PixelPoint denormalize_point(NormPoint p, ScreenDims dims) {
  return {std::lround(p.x * dims.width), std::lround(p.y * dims.height)};
}

}  // namespace guiagent
