#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include <fmt/format.h>

namespace fairbbr {

enum class LogLevel : int { Error = 0, Info = 1, Debug = 2 };

// Level comes from FAIRBBR_LOG (error|info|debug); default info.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("FAIRBBR_LOG");
    if (env == nullptr) return LogLevel::Info;
    std::string v(env);
    if (v == "error") return LogLevel::Error;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

template <typename... Args>
void log_error(fmt::format_string<Args...> f, Args&&... args) {
  fmt::print(stderr, "[error] {}\n", fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void log_info(fmt::format_string<Args...> f, Args&&... args) {
  if (log_level() >= LogLevel::Info) {
    fmt::print(stderr, "[info] {}\n", fmt::format(f, std::forward<Args>(args)...));
  }
}

template <typename... Args>
void log_debug(fmt::format_string<Args...> f, Args&&... args) {
  if (log_level() >= LogLevel::Debug) {
    fmt::print(stderr, "[debug] {}\n", fmt::format(f, std::forward<Args>(args)...));
  }
}

}  // namespace fairbbr
