#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace koopman::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Controlled by KOOPMAN_LOG={error,warn,info,debug}; default warn.
inline Level threshold() {
  static Level lvl = [] {
    const char* env = std::getenv("KOOPMAN_LOG");
    if (!env) return Level::warn;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "info") == 0) return Level::info;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    return Level::warn;
  }();
  return lvl;
}

inline void emit(Level lvl, const char* tag, const char* fmt, ...) {
  if (lvl > threshold()) return;
  std::fprintf(stderr, "[koopman:%s] ", tag);
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

#define KOOPMAN_LOG_ERROR(...) ::koopman::log::emit(::koopman::log::Level::error, "error", __VA_ARGS__)
#define KOOPMAN_LOG_WARN(...) ::koopman::log::emit(::koopman::log::Level::warn, "warn", __VA_ARGS__)
#define KOOPMAN_LOG_INFO(...) ::koopman::log::emit(::koopman::log::Level::info, "info", __VA_ARGS__)
#define KOOPMAN_LOG_DEBUG(...) ::koopman::log::emit(::koopman::log::Level::debug, "debug", __VA_ARGS__)

}  // namespace koopman::log
