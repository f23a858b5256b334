#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "guiagent/action.hpp"

namespace guiagent {

enum class ElementType { Button, TextField, Checkbox, Label, Icon, ListItem };

std::string_view to_string(ElementType t) noexcept;
ElementType element_type_from_string(std::string_view s);

struct Element {
  std::string id;
  ElementType type = ElementType::Label;
  NormBox box;
  std::string text;
  std::map<std::string, std::string> state;

  friend bool operator==(const Element&, const Element&) = default;
};

// A symbolic screenshot. `screen_text` and `digest` are pure functions of
// `screen` and `elements`; build observations with Observation::make.
struct Observation {
  ScreenDims screen;
  std::vector<Element> elements;
  std::string screen_text;
  std::string digest;

  static Observation make(ScreenDims screen, std::vector<Element> elements);

  const Element* find(std::string_view id) const noexcept;
  // Topmost element containing p; the last element in list order wins.
  const Element* hit_test(const NormPoint& p) const noexcept;

  friend bool operator==(const Observation&, const Observation&) = default;
};

std::string render_screen_text(const std::vector<Element>& elements);
std::string compute_digest(ScreenDims screen, const std::vector<Element>& elements);

// Throws CorruptRecord when ids repeat or boxes are malformed.
void validate_elements(const std::vector<Element>& elements);

struct SomMarker {
  std::string label;
  std::string element_id;
  friend bool operator==(const SomMarker&, const SomMarker&) = default;
};

struct SomOverlay {
  std::vector<SomMarker> markers;
  friend bool operator==(const SomOverlay&, const SomOverlay&) = default;
};

// Set-of-Mark rendering: labels "1", "2", ... in element order, prefixed onto
// each screen-text line. The digest is unchanged since elements are.
std::pair<Observation, SomOverlay> render_som(const Observation& obs);

}  // namespace guiagent
