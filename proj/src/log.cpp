#include "mpmsim/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mpmsim {

namespace {

std::atomic<LogLevel> g_level{LogLevel::Info};
std::mutex g_mutex;

void emit(LogLevel level, std::string_view tag, std::string_view message) {
  if (level < g_level.load(std::memory_order_relaxed)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[mpmsim] " << tag << ": " << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) noexcept { g_level.store(level, std::memory_order_relaxed); }
LogLevel log_level() noexcept { return g_level.load(std::memory_order_relaxed); }

void log_info(std::string_view message) { emit(LogLevel::Info, "info", message); }
void log_warning(std::string_view message) { emit(LogLevel::Warning, "warning", message); }

}  // namespace mpmsim
