#include <fstream>
#include <sstream>

#include "json.hpp"

#include "guiagent/error.hpp"
#include "guiagent/task.hpp"
#include "guiagent/trace_io.hpp"

namespace guiagent {

using nlohmann::json;

std::string Task::param(std::string_view key, std::string_view fallback) const {
  auto it = params.find(std::string(key));
  return it == params.end() ? std::string(fallback) : it->second;
}

TaskRegistry::TaskRegistry(std::vector<Task> tasks) {
  for (auto& t : tasks) add(std::move(t));
}

void TaskRegistry::add(Task task) {
  if (find(task.task_id) != nullptr) {
    throw Error(ErrorCode::CorruptRecord, "duplicate task id '" + task.task_id + "'");
  }
  tasks_.push_back(std::move(task));
}

const Task* TaskRegistry::find(std::string_view task_id) const noexcept {
  for (const auto& t : tasks_) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

const Task& TaskRegistry::get(std::string_view task_id) const {
  if (const auto* t = find(task_id)) return *t;
  throw Error(ErrorCode::UnknownTask, "unknown task '" + std::string(task_id) + "'");
}

TaskRegistry TaskRegistry::bundled() {
  std::vector<Task> tasks = {
      {"form_contact", "form", "Fill in the contact form with name Alice Smith and email alice@example.com, then submit it",
       {{"fields", "name,email"}, {"value.name", "Alice Smith"}, {"value.email", "alice@example.com"}, {"title", "Contact us"}},
       7, "form.submitted", Platform::Desktop, 6},
      {"form_signup", "form", "Sign up as user bob42 with email bob@example.org and accept the terms",
       {{"fields", "username,email"}, {"value.username", "bob42"}, {"value.email", "bob@example.org"},
        {"require_agree", "true"}, {"title", "Create account"}},
       11, "form.submitted", Platform::Desktop, 7},
      {"form_feedback", "form", "Send the feedback 'Great app' after agreeing to the terms",
       {{"fields", "comment"}, {"value.comment", "Great app"}, {"require_agree", "true"}, {"title", "Feedback"}},
       3, "form.submitted", Platform::Desktop, 5},
      {"settings_network", "settings", "Turn Wi-Fi on and Bluetooth off",
       {{"target.wifi", "on"}, {"target.bluetooth", "off"}, {"init.wifi", "off"}, {"init.bluetooth", "on"}},
       5, "settings.values", Platform::Mobile, 4},
      {"settings_display_privacy", "settings", "Enable dark mode and disable location access",
       {{"target.dark_mode", "on"}, {"target.location", "off"}, {"init.dark_mode", "off"}, {"init.location", "on"}},
       9, "settings.values", Platform::Mobile, 6},
      {"settings_airplane_text", "settings", "Switch on airplane mode and large text",
       {{"target.airplane_mode", "on"}, {"target.large_text", "on"}, {"init.airplane_mode", "off"},
        {"init.large_text", "off"}},
       21, "settings.values", Platform::Mobile, 6},
      {"files_delete_report", "files", "Delete report.txt from the Documents folder",
       {{"folder", "Documents"}, {"file", "report.txt"}, {"method", "menu"}},
       4, "files.deleted", Platform::Desktop, 6},
      {"files_delete_photo", "files", "Delete receipt.pdf from Pictures using the keyboard",
       {{"folder", "Pictures"}, {"file", "receipt.pdf"}, {"method", "hotkey"}},
       8, "files.deleted", Platform::Desktop, 6},
      {"files_open_song", "files", "Open demo.ogg in the Music folder",
       {{"folder", "Music"}, {"file", "demo.ogg"}, {"method", "open"}},
       2, "files.opened", Platform::Desktop, 4},
      {"browser_bookmark_news", "browser", "Bookmark the page news.example.com",
       {{"url", "news.example.com"}, {"start", "home.example.com"}},
       13, "browser.bookmarked", Platform::Desktop, 5},
  };
  return TaskRegistry(std::move(tasks));
}

TaskRegistry TaskRegistry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open task registry " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, "task registry " + path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "guiagent-tasks" || !doc.contains("tasks")) {
    throw Error(ErrorCode::CorruptRecord, "task registry " + path + " has no guiagent-tasks header");
  }
  if (doc.value("version", 0) != 1) {
    throw Error(ErrorCode::SchemaVersionMismatch, "task registry version must be 1");
  }
  TaskRegistry reg;
  for (const auto& t : doc.at("tasks")) reg.add(io::task_from_json(t));
  return reg;
}

void TaskRegistry::save(const std::string& path) const {
  json doc{{"format", "guiagent-tasks"}, {"version", 1}, {"tasks", json::array()}};
  for (const auto& t : tasks_) doc["tasks"].push_back(io::task_to_json(t));
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace guiagent
