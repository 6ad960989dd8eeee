#include "sparsemeter/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace sparsemeter::log {

namespace {

std::atomic<Level> g_level{Level::warn};
std::mutex g_mutex;

void emit(Level at, std::string_view tag, std::string_view message) {
  if (static_cast<int>(at) < static_cast<int>(g_level.load())) return;
  std::lock_guard lock(g_mutex);
  std::clog << "[sparsemeter " << tag << "] " << message << '\n';
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void debug(std::string_view message) { emit(Level::debug, "debug", message); }
void info(std::string_view message) { emit(Level::info, "info", message); }
void warn(std::string_view message) { emit(Level::warn, "warn", message); }

}  // namespace sparsemeter::log
