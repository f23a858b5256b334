#include "sim_apps.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include "guiagent/error.hpp"
#include "guiagent/util.hpp"

namespace guiagent::detail {
namespace {

constexpr ScreenDims kDesktop{1920, 1080};
constexpr ScreenDims kMobile{1080, 2400};

std::string flag(bool v) { return v ? "true" : "false"; }

Element make_element(std::string id, ElementType type, NormBox box, std::string text,
                     std::map<std::string, std::string> state = {}) {
  return Element{std::move(id), type, box, std::move(text), std::move(state)};
}

const Element& element_by_id(const std::vector<Element>& els, std::string_view id) {
  for (const auto& e : els) {
    if (e.id == id) return e;
  }
  throw Error(ErrorCode::NoOracle, "oracle target '" + std::string(id) + "' not on screen");
}

OracleMove point_move(const std::vector<Element>& els, std::string_view id, ActionKind kind,
                      std::string intent) {
  const auto& e = element_by_id(els, id);
  Action a;
  a.kind = kind;
  a.start = e.box.center();
  return {a, e.box, std::move(intent)};
}

OracleMove click(const std::vector<Element>& els, std::string_view id, std::string intent) {
  return point_move(els, id, ActionKind::Click, std::move(intent));
}

std::vector<std::string> split_csv(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    std::string_view tok = s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos);
    if (!tok.empty()) out.emplace_back(tok);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool parse_on_off(std::string_view v, std::string_view key) {
  if (v == "on" || v == "true") return true;
  if (v == "off" || v == "false") return false;
  throw Error(ErrorCode::UnknownTask, "parameter '" + std::string(key) + "' must be on/off, got '" +
                                          std::string(v) + "'");
}

std::mt19937_64 task_rng(const Task& task) {
  return std::mt19937_64(derive_seed(task.seed, task.task_id));
}

void require_goal(const Task& task, std::initializer_list<std::string_view> goals) {
  for (auto g : goals) {
    if (task.goal == g) return;
  }
  throw Error(ErrorCode::UnknownGoal, "goal '" + task.goal + "' is not defined for app '" +
                                          task.app + "'");
}

// ---------------------------------------------------------------- form ----

class FormApp final : public App {
 public:
  explicit FormApp(const Task& task) {
    require_goal(task, {"form.submitted"});
    auto names = split_csv(task.param("fields"));
    if (names.empty() || names.size() > 3) {
      throw Error(ErrorCode::UnknownTask, "form tasks need 1 to 3 fields");
    }
    for (auto& n : names) {
      fields_.push_back({n, task.param("value." + n), {}});
      if (fields_.back().expected.empty()) {
        throw Error(ErrorCode::UnknownTask, "missing value." + n);
      }
    }
    require_agree_ = task.param("require_agree", "false") == "true";
    title_ = task.param("title", "Form");
    auto rng = task_rng(task);
    offset_ = 0.02 * static_cast<double>(rng() % 5);
    if (task.param("autofocus", "false") == "true") {
      focused_ = 0;
      selected_ = true;
    }
  }

  std::unique_ptr<App> clone() const override { return std::make_unique<FormApp>(*this); }
  ScreenDims screen() const override { return kDesktop; }
  std::string screen_name() const override { return confirmed_ ? "confirmation" : "form"; }

  std::vector<Element> elements() const override {
    std::vector<Element> els;
    if (confirmed_) {
      std::string summary = "Submitted:";
      for (std::size_t i = 0; i < fields_.size(); ++i) {
        summary += (i ? "; " : " ") + fields_[i].name + "=" + submitted_[i];
      }
      els.push_back(make_element("confirmation", ElementType::Label, {0.1, 0.2, 0.9, 0.3}, summary));
      els.push_back(make_element("new_entry", ElementType::Button, {0.4, 0.4, 0.6, 0.46}, "New entry"));
      return els;
    }
    els.push_back(make_element("title", ElementType::Label, {0.1, 0.04 + offset_, 0.9, 0.1 + offset_}, title_));
    double y = 0.15 + offset_;
    for (std::size_t i = 0; i < fields_.size(); ++i, y += 0.1) {
      const auto& f = fields_[i];
      els.push_back(make_element("label_" + f.name, ElementType::Label, {0.1, y, 0.25, y + 0.06}, f.name));
      bool focused = focused_ == static_cast<int>(i);
      els.push_back(make_element("field_" + f.name, ElementType::TextField, {0.27, y, 0.7, y + 0.06},
                                 f.text,
                                 {{"focused", flag(focused)}, {"selected", flag(focused && selected_)}}));
    }
    if (require_agree_) {
      els.push_back(make_element("agree", ElementType::Checkbox, {0.27, y, 0.7, y + 0.06},
                                 "I agree to the terms", {{"checked", flag(agree_)}}));
      y += 0.1;
    }
    els.push_back(make_element("clear", ElementType::Button, {0.27, y, 0.4, y + 0.06}, "Clear"));
    els.push_back(make_element("submit", ElementType::Button, {0.45, y, 0.6, y + 0.06}, "Submit"));
    if (error_) {
      y += 0.1;
      els.push_back(make_element("error", ElementType::Label, {0.27, y, 0.9, y + 0.06},
                                 "Please complete all required fields"));
    }
    return els;
  }

  void on_click(const std::string& id) override {
    if (confirmed_) {
      if (id == "new_entry") {
        for (auto& f : fields_) f.text.clear();
        confirmed_ = false;
        agree_ = false;
        focused_ = -1;
        selected_ = false;
        error_ = false;
      }
      return;
    }
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (id == "field_" + fields_[i].name) {
        focused_ = static_cast<int>(i);
        selected_ = true;
        return;
      }
    }
    if (id == "agree") {
      agree_ = !agree_;
    } else if (id == "clear") {
      for (auto& f : fields_) f.text.clear();
      focused_ = -1;
      selected_ = false;
      error_ = false;
    } else if (id == "submit") {
      submit();
    }
  }

  void on_type(const std::string& text) override {
    if (confirmed_ || focused_ < 0) return;
    auto& f = fields_[static_cast<std::size_t>(focused_)];
    if (selected_) {
      f.text = text;
      selected_ = false;
    } else {
      f.text += text;
    }
  }

  void on_hotkey(const std::string& key) override {
    if (confirmed_) return;
    if (key == "ctrl+a" && focused_ >= 0) selected_ = true;
    if (key == "enter") submit();
  }

  bool goal_satisfied() const override {
    if (!confirmed_) return false;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (submitted_[i] != fields_[i].expected) return false;
    }
    return true;
  }

  std::optional<OracleMove> oracle() const override {
    auto els = elements();
    if (confirmed_) return click(els, "new_entry", "start a new entry to fix the submitted values");
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      const auto& f = fields_[i];
      if (f.text == f.expected) continue;
      if (focused_ == static_cast<int>(i) && (selected_ || f.text.empty())) {
        return OracleMove{Action::type(f.expected), std::nullopt,
                          "type \"" + f.expected + "\" into the " + f.name + " field"};
      }
      return click(els, "field_" + f.name, "click the " + f.name + " field");
    }
    if (require_agree_ && !agree_) return click(els, "agree", "tick the terms checkbox");
    return click(els, "submit", "click the Submit button");
  }

 private:
  struct Field {
    std::string name;
    std::string expected;
    std::string text;
  };

  void submit() {
    bool complete = std::all_of(fields_.begin(), fields_.end(),
                                [](const Field& f) { return !f.text.empty(); });
    if (complete && (!require_agree_ || agree_)) {
      confirmed_ = true;
      submitted_.clear();
      for (const auto& f : fields_) submitted_.push_back(f.text);
      focused_ = -1;
      selected_ = false;
      error_ = false;
    } else {
      error_ = true;
    }
  }

  std::vector<Field> fields_;
  std::vector<std::string> submitted_;
  std::string title_;
  double offset_ = 0.0;
  int focused_ = -1;
  bool selected_ = false;
  bool require_agree_ = false;
  bool agree_ = false;
  bool error_ = false;
  bool confirmed_ = false;
};

// ------------------------------------------------------------ settings ----

struct SettingsCategory {
  std::string_view name;
  std::string_view title;
  std::vector<std::string_view> keys;
};

const std::vector<SettingsCategory>& settings_categories() {
  static const std::vector<SettingsCategory> cats = {
      {"network", "Network", {"wifi", "bluetooth", "airplane_mode"}},
      {"display", "Display", {"dark_mode", "large_text"}},
      {"privacy", "Privacy", {"location", "camera_access"}},
  };
  return cats;
}

class SettingsApp final : public App {
 public:
  explicit SettingsApp(const Task& task) {
    require_goal(task, {"settings.values"});
    auto rng = task_rng(task);
    for (const auto& c : settings_categories()) {
      for (auto k : c.keys) {
        std::string key(k);
        toggles_[key] = (rng() & 1U) != 0;
        auto init = task.param("init." + key);
        if (!init.empty()) toggles_[key] = parse_on_off(init, "init." + key);
        auto target = task.param("target." + key);
        if (!target.empty()) targets_.emplace_back(key, parse_on_off(target, "target." + key));
      }
    }
    if (targets_.empty()) throw Error(ErrorCode::UnknownTask, "settings task without targets");
  }

  std::unique_ptr<App> clone() const override { return std::make_unique<SettingsApp>(*this); }
  ScreenDims screen() const override { return kMobile; }
  std::string screen_name() const override { return screen_; }

  std::vector<Element> elements() const override {
    std::vector<Element> els;
    if (screen_ == "launcher") {
      els.push_back(make_element("clock", ElementType::Label, {0.3, 0.05, 0.7, 0.1}, "12:00"));
      els.push_back(make_element("app_settings", ElementType::Icon, {0.1, 0.2, 0.3, 0.3}, "Settings"));
      els.push_back(make_element("app_camera", ElementType::Icon, {0.4, 0.2, 0.6, 0.3}, "Camera"));
      return els;
    }
    if (screen_ == "main") {
      els.push_back(make_element("title", ElementType::Label, {0.05, 0.03, 0.95, 0.08}, "Settings"));
      double y = 0.12;
      for (const auto& c : settings_categories()) {
        els.push_back(make_element("cat_" + std::string(c.name), ElementType::ListItem,
                                   {0.05, y, 0.95, y + 0.08}, std::string(c.title)));
        y += 0.1;
      }
      return els;
    }
    const auto& cat = current_category();
    els.push_back(make_element("title", ElementType::Label, {0.05, 0.03, 0.95, 0.08}, std::string(cat.title)));
    double y = 0.12;
    for (auto k : cat.keys) {
      std::string key(k);
      els.push_back(make_element("toggle_" + key, ElementType::Checkbox, {0.05, y, 0.95, y + 0.08}, key,
                                 {{"checked", flag(toggles_.at(key))}}));
      y += 0.1;
    }
    return els;
  }

  void on_click(const std::string& id) override {
    if (screen_ == "launcher") {
      if (id == "app_settings") screen_ = "main";
      return;
    }
    if (screen_ == "main") {
      if (id.starts_with("cat_")) screen_ = "cat:" + id.substr(4);
      return;
    }
    if (id.starts_with("toggle_")) {
      auto key = id.substr(7);
      toggles_[key] = !toggles_[key];
    }
  }

  void on_back() override {
    if (screen_.starts_with("cat:")) {
      screen_ = "main";
    } else if (screen_ == "main") {
      screen_ = "launcher";
    }
  }

  void on_home() override { screen_ = "launcher"; }

  bool goal_satisfied() const override {
    return std::all_of(targets_.begin(), targets_.end(),
                       [&](const auto& t) { return toggles_.at(t.first) == t.second; });
  }

  std::optional<OracleMove> oracle() const override {
    auto els = elements();
    for (const auto& [key, value] : targets_) {
      if (toggles_.at(key) == value) continue;
      std::string cat(category_of(key));
      if (screen_ == "launcher") return click(els, "app_settings", "open the Settings app");
      if (screen_ == "main") return click(els, "cat_" + cat, "open the " + cat + " settings");
      if (screen_ == "cat:" + cat) {
        return click(els, "toggle_" + key, "turn " + key + (value ? " on" : " off"));
      }
      return OracleMove{Action::nullary(ActionKind::PressBack), std::nullopt,
                        "go back to the settings list"};
    }
    return std::nullopt;
  }

 private:
  static std::string_view category_of(const std::string& key) {
    for (const auto& c : settings_categories()) {
      if (std::find(c.keys.begin(), c.keys.end(), key) != c.keys.end()) return c.name;
    }
    return {};
  }

  const SettingsCategory& current_category() const {
    auto name = std::string_view(screen_).substr(4);
    for (const auto& c : settings_categories()) {
      if (c.name == name) return c;
    }
    return settings_categories().front();
  }

  std::string screen_ = "main";
  std::map<std::string, bool> toggles_;
  std::vector<std::pair<std::string, bool>> targets_;
};

// --------------------------------------------------------------- files ----

constexpr int kVisibleRows = 4;
constexpr int kScrollRows = 2;
constexpr NormBox kFileListBox{0.05, 0.15, 0.75, 0.55};

class FilesApp final : public App {
 public:
  explicit FilesApp(const Task& task) {
    require_goal(task, {"files.deleted", "files.opened"});
    goal_open_ = task.goal == "files.opened";
    folders_ = {
        {"Documents", {"report.txt", "notes.txt", "budget.xlsx", "letter.docx", "todo.md", "slides.pptx"}},
        {"Pictures", {"beach.jpg", "family.png", "sunset.jpg", "receipt.pdf", "cat.gif", "map.png"}},
        {"Music", {"song.mp3", "podcast.mp3", "intro.wav", "demo.ogg", "mix.flac", "tune.mp3"}},
    };
    auto rng = task_rng(task);
    for (auto& [name, files] : folders_) {
      for (std::size_t i = files.size() - 1; i > 0; --i) {
        std::swap(files[i], files[rng() % (i + 1)]);
      }
    }
    target_folder_ = task.param("folder");
    target_file_ = task.param("file");
    method_ = task.param("method", goal_open_ ? "open" : "menu");
    auto f = std::find_if(folders_.begin(), folders_.end(),
                          [&](const auto& p) { return p.first == target_folder_; });
    if (f == folders_.end() ||
        std::find(f->second.begin(), f->second.end(), target_file_) == f->second.end()) {
      throw Error(ErrorCode::UnknownTask, "file task target not present: " + target_folder_ + "/" + target_file_);
    }
    if (method_ != "menu" && method_ != "hotkey" && method_ != "open") {
      throw Error(ErrorCode::UnknownTask, "unknown files method '" + method_ + "'");
    }
  }

  std::unique_ptr<App> clone() const override { return std::make_unique<FilesApp>(*this); }
  ScreenDims screen() const override { return kDesktop; }
  std::string screen_name() const override { return screen_ == "folders" ? "folders" : screen_ + ":" + folder_; }

  std::vector<Element> elements() const override {
    std::vector<Element> els;
    if (screen_ == "folders") {
      els.push_back(make_element("path", ElementType::Label, {0.05, 0.03, 0.95, 0.08}, "Home"));
      double y = 0.15;
      for (const auto& [name, files] : folders_) {
        els.push_back(make_element("folder_" + name, ElementType::ListItem, {0.05, y, 0.75, y + 0.08}, name));
        y += 0.1;
      }
      return els;
    }
    if (screen_ == "viewer") {
      els.push_back(make_element("viewer_title", ElementType::Label, {0.05, 0.03, 0.95, 0.08}, opened_));
      els.push_back(make_element("viewer_content", ElementType::Label, {0.05, 0.12, 0.95, 0.8},
                                 "Contents of " + folder_ + "/" + opened_));
      els.push_back(make_element("close_viewer", ElementType::Button, {0.8, 0.85, 0.95, 0.91}, "Close"));
      return els;
    }
    const auto& files = files_in(folder_);
    els.push_back(make_element("path", ElementType::Label, {0.05, 0.03, 0.95, 0.08}, "Home/" + folder_));
    els.push_back(make_element("file_list", ElementType::Label, kFileListBox, "Files"));
    int end = std::min<int>(offset_ + kVisibleRows, static_cast<int>(files.size()));
    for (int i = offset_; i < end; ++i) {
      const auto& name = files[static_cast<std::size_t>(i)];
      double y = row_y(i);
      els.push_back(make_element("file_" + name, ElementType::ListItem, {0.06, y, 0.74, y + 0.09}, name,
                                 {{"selected", flag(selected_ == name)}}));
    }
    els.push_back(make_element("back", ElementType::Button, {0.05, 0.6, 0.2, 0.66}, "Back"));
    els.push_back(make_element("delete", ElementType::Button, {0.25, 0.6, 0.4, 0.66}, "Delete",
                               {{"enabled", flag(!selected_.empty())}}));
    std::ostringstream hint;
    hint << "Showing " << (files.empty() ? 0 : offset_ + 1) << "-" << end << " of " << files.size();
    els.push_back(make_element("scroll_hint", ElementType::Label, {0.45, 0.6, 0.75, 0.66}, hint.str()));
    if (screen_ == "menu") {
      auto idx = index_of(menu_for_);
      double y = row_y(idx) + 0.02;
      const std::array<std::pair<const char*, const char*>, 3> items = {
          {{"menu_open", "Open"}, {"menu_delete", "Delete"}, {"menu_cancel", "Cancel"}}};
      for (const auto& [id, label] : items) {
        els.push_back(make_element(id, ElementType::ListItem, {0.55, y, 0.75, y + 0.05}, label));
        y += 0.05;
      }
    } else if (screen_ == "confirm") {
      els.push_back(make_element("confirm_msg", ElementType::Label, {0.3, 0.3, 0.7, 0.36},
                                 "Delete " + confirm_for_ + "?"));
      els.push_back(make_element("confirm_yes", ElementType::Button, {0.32, 0.4, 0.48, 0.46}, "Delete"));
      els.push_back(make_element("confirm_no", ElementType::Button, {0.52, 0.4, 0.68, 0.46}, "Cancel"));
    }
    return els;
  }

  void on_click(const std::string& id) override {
    if (screen_ == "folders") {
      if (id.starts_with("folder_")) {
        folder_ = id.substr(7);
        offset_ = 0;
        selected_.clear();
        screen_ = "folder";
      }
    } else if (screen_ == "folder") {
      if (id.starts_with("file_") && id != "file_list") {
        selected_ = id.substr(5);
      } else if (id == "back") {
        selected_.clear();
        screen_ = "folders";
      } else if (id == "delete" && !selected_.empty()) {
        confirm_for_ = selected_;
        screen_ = "confirm";
      }
    } else if (screen_ == "menu") {
      if (id == "menu_open") {
        opened_ = menu_for_;
        screen_ = "viewer";
      } else if (id == "menu_delete") {
        confirm_for_ = menu_for_;
        screen_ = "confirm";
      } else {
        screen_ = "folder";
      }
    } else if (screen_ == "confirm") {
      if (id == "confirm_yes") {
        remove_file(confirm_for_);
        screen_ = "folder";
      } else if (id == "confirm_no") {
        screen_ = "folder";
      }
    } else if (screen_ == "viewer") {
      if (id == "close_viewer") screen_ = "folder";
    }
  }

  void on_double_click(const std::string& id) override {
    if (screen_ == "folder" && id.starts_with("file_") && id != "file_list") {
      selected_ = id.substr(5);
      opened_ = selected_;
      screen_ = "viewer";
    } else if (screen_ == "folders") {
      on_click(id);
    }
  }

  void on_right_click(const std::string& id) override {
    if (screen_ == "folder" && id.starts_with("file_") && id != "file_list") {
      selected_ = id.substr(5);
      menu_for_ = selected_;
      screen_ = "menu";
    }
  }

  void on_scroll(const std::string* target, ScrollDirection d) override {
    if (screen_ != "folder" || target == nullptr) return;
    if (!target->starts_with("file_")) return;
    int n = static_cast<int>(files_in(folder_).size());
    int max_offset = std::max(0, n - kVisibleRows);
    if (d == ScrollDirection::Down) offset_ = std::min(offset_ + kScrollRows, max_offset);
    if (d == ScrollDirection::Up) offset_ = std::max(offset_ - kScrollRows, 0);
  }

  void on_hotkey(const std::string& key) override {
    if (key == "delete" && screen_ == "folder" && !selected_.empty()) {
      confirm_for_ = selected_;
      screen_ = "confirm";
    } else if (key == "ctrl+z" && (screen_ == "folder" || screen_ == "folders") && !deleted_.empty()) {
      auto [folder, index, name] = deleted_.back();
      deleted_.pop_back();
      auto& files = files_in_mut(folder);
      files.insert(files.begin() + std::min<long>(index, static_cast<long>(files.size())), name);
    } else if (key == "escape" && (screen_ == "menu" || screen_ == "confirm")) {
      screen_ = "folder";
    }
  }

  bool goal_satisfied() const override {
    if (goal_open_) return screen_ == "viewer" && opened_ == target_file_ && folder_ == target_folder_ && deleted_.empty();
    return deleted_.size() == 1 && std::get<0>(deleted_[0]) == target_folder_ &&
           std::get<2>(deleted_[0]) == target_file_;
  }

  std::optional<OracleMove> oracle() const override {
    auto els = elements();
    bool wrong_deletion = std::any_of(deleted_.begin(), deleted_.end(), [&](const auto& d) {
      return std::get<0>(d) != target_folder_ || std::get<2>(d) != target_file_;
    });
    bool target_deleted = std::any_of(deleted_.begin(), deleted_.end(), [&](const auto& d) {
      return std::get<0>(d) == target_folder_ && std::get<2>(d) == target_file_;
    });
    if (screen_ == "confirm") {
      if (!goal_open_ && !wrong_deletion && confirm_for_ == target_file_ && folder_ == target_folder_) {
        return click(els, "confirm_yes", "confirm deleting " + target_file_);
      }
      return click(els, "confirm_no", "cancel this deletion");
    }
    if (screen_ == "menu") {
      bool on_target = menu_for_ == target_file_ && folder_ == target_folder_ && !wrong_deletion;
      if (on_target && goal_open_) return click(els, "menu_open", "choose Open from the menu");
      if (on_target && method_ == "menu") return click(els, "menu_delete", "choose Delete from the menu");
      return click(els, "menu_cancel", "dismiss the context menu");
    }
    if (screen_ == "viewer") return click(els, "close_viewer", "close the file viewer");
    if (wrong_deletion || (goal_open_ && !deleted_.empty())) {
      return OracleMove{Action::hotkey("ctrl+z"), std::nullopt, "undo the last deletion"};
    }
    if (target_deleted) return std::nullopt;
    if (screen_ == "folders") return click(els, "folder_" + target_folder_, "open the " + target_folder_ + " folder");
    if (folder_ != target_folder_) return click(els, "back", "go back to the folder list");
    int idx = index_of(target_file_);
    if (idx < offset_ || idx >= offset_ + kVisibleRows) {
      auto dir = idx < offset_ ? ScrollDirection::Up : ScrollDirection::Down;
      return OracleMove{Action::scroll(kFileListBox.center(), dir), kFileListBox,
                        "scroll the file list " + std::string(to_string(dir)) + " to look for " + target_file_};
    }
    std::string id = "file_" + target_file_;
    if (goal_open_) return point_move(els, id, ActionKind::LeftDouble, "double-click " + target_file_);
    if (method_ == "hotkey") {
      if (selected_ == target_file_) {
        return OracleMove{Action::hotkey("delete"), std::nullopt, "press Delete on the selected file"};
      }
      return click(els, id, "select " + target_file_);
    }
    return point_move(els, id, ActionKind::RightSingle, "right-click " + target_file_);
  }

 private:
  double row_y(int index_in_folder) const {
    return 0.15 + 0.1 * static_cast<double>(index_in_folder - offset_);
  }

  const std::vector<std::string>& files_in(const std::string& folder) const {
    for (const auto& [name, files] : folders_) {
      if (name == folder) return files;
    }
    static const std::vector<std::string> empty;
    return empty;
  }

  std::vector<std::string>& files_in_mut(const std::string& folder) {
    for (auto& [name, files] : folders_) {
      if (name == folder) return files;
    }
    throw Error(ErrorCode::UnknownTask, "no folder " + folder);
  }

  int index_of(const std::string& file) const {
    const auto& files = files_in(folder_);
    auto it = std::find(files.begin(), files.end(), file);
    return it == files.end() ? -1 : static_cast<int>(it - files.begin());
  }

  void remove_file(const std::string& file) {
    auto& files = files_in_mut(folder_);
    auto it = std::find(files.begin(), files.end(), file);
    if (it == files.end()) return;
    deleted_.emplace_back(folder_, static_cast<long>(it - files.begin()), file);
    files.erase(it);
    if (selected_ == file) selected_.clear();
    int max_offset = std::max(0, static_cast<int>(files.size()) - kVisibleRows);
    offset_ = std::min(offset_, max_offset);
  }

  std::vector<std::pair<std::string, std::vector<std::string>>> folders_;
  std::vector<std::tuple<std::string, long, std::string>> deleted_;
  std::string screen_ = "folders";
  std::string folder_;
  std::string selected_;
  std::string menu_for_;
  std::string confirm_for_;
  std::string opened_;
  std::string target_folder_;
  std::string target_file_;
  std::string method_;
  int offset_ = 0;
  bool goal_open_ = false;
};

// ------------------------------------------------------------- browser ----

const std::map<std::string, std::string, std::less<>>& browser_pages() {
  static const std::map<std::string, std::string, std::less<>> pages = {
      {"home.example.com", "Welcome home"},
      {"news.example.com", "Top stories today"},
      {"docs.example.com", "Documentation index"},
      {"shop.example.com", "Deals of the day"},
  };
  return pages;
}

class BrowserApp final : public App {
 public:
  explicit BrowserApp(const Task& task) {
    require_goal(task, {"browser.bookmarked"});
    target_ = task.param("url");
    if (target_.empty()) throw Error(ErrorCode::UnknownTask, "browser task without url");
    url_ = task.param("start", "home.example.com");
    address_ = url_;
    static const std::array<const char*, 4> tips = {
        "Tip: press ctrl+l to focus the address bar", "Tip: bookmarks sync across devices",
        "Tip: ctrl+shift+t reopens a closed tab", "Tip: the star icon saves a bookmark"};
    auto rng = task_rng(task);
    tip_ = tips[rng() % tips.size()];
  }

  std::unique_ptr<App> clone() const override { return std::make_unique<BrowserApp>(*this); }
  ScreenDims screen() const override { return kDesktop; }
  std::string screen_name() const override { return closed_ ? "closed" : "page:" + url_; }

  std::vector<Element> elements() const override {
    std::vector<Element> els;
    els.push_back(make_element("address", ElementType::TextField, {0.1, 0.02, 0.7, 0.07}, address_,
                               {{"focused", flag(focused_)}, {"selected", flag(focused_ && selected_)}}));
    els.push_back(make_element("go", ElementType::Button, {0.71, 0.02, 0.78, 0.07}, "Go"));
    if (closed_) {
      els.push_back(make_element("closed_msg", ElementType::Label, {0.3, 0.3, 0.7, 0.36}, "Tab closed"));
      els.push_back(make_element("reopen", ElementType::Button, {0.35, 0.4, 0.65, 0.48}, "Reopen closed tab"));
      return els;
    }
    bool marked = is_bookmarked(url_);
    els.push_back(make_element("bookmark", ElementType::Icon, {0.8, 0.02, 0.85, 0.07},
                               marked ? "Bookmarked" : "Bookmark", {{"bookmarked", flag(marked)}}));
    els.push_back(make_element("close_tab", ElementType::Icon, {0.9, 0.02, 0.95, 0.07}, "Close tab"));
    auto page = browser_pages().find(url_);
    els.push_back(make_element("content", ElementType::Label, {0.05, 0.15, 0.95, 0.8},
                               page == browser_pages().end() ? "Page not found" : page->second));
    els.push_back(make_element("tip", ElementType::Label, {0.05, 0.85, 0.95, 0.9}, tip_));
    return els;
  }

  void on_click(const std::string& id) override {
    if (id == "address") {
      focused_ = true;
      selected_ = true;
    } else if (id == "go") {
      navigate();
    } else if (id == "bookmark" && !closed_) {
      auto it = std::find(bookmarks_.begin(), bookmarks_.end(), url_);
      if (it == bookmarks_.end()) {
        bookmarks_.push_back(url_);
      } else {
        bookmarks_.erase(it);
      }
    } else if (id == "close_tab" && !closed_) {
      closed_ = true;
      closed_url_ = url_;
      address_.clear();
      focused_ = false;
      selected_ = false;
    } else if (id == "reopen" && closed_) {
      reopen();
    }
  }

  void on_type(const std::string& text) override {
    if (!focused_) return;
    if (selected_) {
      address_ = text;
      selected_ = false;
    } else {
      address_ += text;
    }
  }

  void on_hotkey(const std::string& key) override {
    if (key == "enter") {
      navigate();
    } else if (key == "ctrl+l") {
      focused_ = true;
      selected_ = true;
    } else if (key == "ctrl+shift+t" && closed_) {
      reopen();
    }
  }

  bool goal_satisfied() const override { return is_bookmarked(target_); }

  std::optional<OracleMove> oracle() const override {
    auto els = elements();
    if (closed_ && closed_url_ == target_) {
      return click(els, "reopen", "reopen the tab I closed by mistake");
    }
    if (!closed_ && url_ == target_) {
      return click(els, "bookmark", "click the bookmark icon");
    }
    if (address_ == target_) return click(els, "go", "click Go to load " + target_);
    if (focused_ && (selected_ || address_.empty())) {
      return OracleMove{Action::type(target_), std::nullopt, "type " + target_ + " into the address bar"};
    }
    return click(els, "address", "click the address bar");
  }

 private:
  bool is_bookmarked(const std::string& url) const {
    return std::find(bookmarks_.begin(), bookmarks_.end(), url) != bookmarks_.end();
  }

  void navigate() {
    if (address_.empty()) return;
    url_ = address_;
    closed_ = false;
    focused_ = false;
    selected_ = false;
  }

  void reopen() {
    closed_ = false;
    url_ = closed_url_;
    address_ = url_;
    focused_ = false;
    selected_ = false;
  }

  std::string target_;
  std::string url_;
  std::string address_;
  std::string closed_url_;
  std::string tip_;
  std::vector<std::string> bookmarks_;
  bool focused_ = false;
  bool selected_ = false;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<App> make_app(const Task& task) {
  if (task.app == "form") return std::make_unique<FormApp>(task);
  if (task.app == "settings") return std::make_unique<SettingsApp>(task);
  if (task.app == "files") return std::make_unique<FilesApp>(task);
  if (task.app == "browser") return std::make_unique<BrowserApp>(task);
  throw Error(ErrorCode::UnknownApp, "unknown app '" + task.app + "'");
}

void dispatch(App& app, const Action& action) {
  const auto els = app.elements();
  auto hit = [&](const NormPoint& p) -> const std::string* {
    for (auto it = els.rbegin(); it != els.rend(); ++it) {
      if (it->box.contains(p)) return &it->id;
    }
    return nullptr;
  };
  switch (action.kind) {
    case ActionKind::Click:
      if (auto* id = hit(action.start)) app.on_click(*id);
      break;
    case ActionKind::LeftDouble:
      if (auto* id = hit(action.start)) app.on_double_click(*id);
      break;
    case ActionKind::RightSingle:
      if (auto* id = hit(action.start)) app.on_right_click(*id);
      break;
    case ActionKind::LongPress:
      if (auto* id = hit(action.start)) app.on_long_press(*id);
      break;
    case ActionKind::Drag:
      app.on_drag(hit(action.start), hit(action.end));
      break;
    case ActionKind::Scroll:
      app.on_scroll(hit(action.start), action.direction);
      break;
    case ActionKind::Type:
      app.on_type(action.text);
      break;
    case ActionKind::Hotkey:
      app.on_hotkey(action.text);
      break;
    case ActionKind::PressBack:
      app.on_back();
      break;
    case ActionKind::PressHome:
      app.on_home();
      break;
    case ActionKind::PressEnter:
      app.on_enter();
      break;
    case ActionKind::Wait:
    case ActionKind::Finished:
    case ActionKind::CallUser:
      break;
  }
}

}  // namespace guiagent::detail
