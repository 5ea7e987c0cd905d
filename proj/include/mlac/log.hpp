#pragma once

#include <sstream>
#include <string>

namespace mlac::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Threshold from MLAC_LOG (error|warn|info|debug), default warn.
Level threshold();
void set_threshold(Level level);
void write(Level level, const std::string& message);

template <class... Args>
void emit(Level level, const Args&... args) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  std::ostringstream os;
  (os << ... << args);
  write(level, os.str());
}

template <class... Args>
void warn(const Args&... args) { emit(Level::Warn, args...); }
template <class... Args>
void info(const Args&... args) { emit(Level::Info, args...); }
template <class... Args>
void debug(const Args&... args) { emit(Level::Debug, args...); }

}  // namespace mlac::log
