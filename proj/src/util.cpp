#include "guiagent/util.hpp"

#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "guiagent/error.hpp"

namespace guiagent {

namespace fs = std::filesystem;

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf, 16);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string temp_sibling(const std::string& path) {
  static std::atomic<std::uint64_t> counter{0};
  auto n = counter.fetch_add(1);
  return path + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(n);
}

void write_plain(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "short write to '" + path + "'");
}

}  // namespace

void write_file_atomic(const std::string& path, std::string_view content) {
  auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  auto tmp = temp_sibling(path);
  write_plain(tmp, content);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::Io, "cannot rename into '" + path + "': " + ec.message());
  }
}

bool write_file_exclusive(const std::string& path, std::string_view content) {
  auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  auto tmp = temp_sibling(path);
  write_plain(tmp, content);
  int rc = ::link(tmp.c_str(), path.c_str());
  int err = errno;
  fs::remove(tmp);
  if (rc == 0) return true;
  if (err == EEXIST) return false;
  throw Error(ErrorCode::Io, "cannot create '" + path + "': " + std::strerror(err));
}

}  // namespace guiagent
