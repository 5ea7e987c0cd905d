#include "mlac/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace mlac::log {

namespace {

Level from_env() {
  const char* env = std::getenv("MLAC_LOG");
  if (env == nullptr) return Level::Warn;
  const std::string s(env);
  if (s == "error") return Level::Error;
  if (s == "info") return Level::Info;
  if (s == "debug") return Level::Debug;
  return Level::Warn;
}

std::atomic<int>& level_storage() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

}  // namespace

Level threshold() { return static_cast<Level>(level_storage().load()); }

void set_threshold(Level level) { level_storage().store(static_cast<int>(level)); }

void write(Level level, const std::string& message) {
  static std::mutex mutex;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mutex);
  std::cerr << "[mlac " << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace mlac::log
