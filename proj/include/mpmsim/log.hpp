#pragma once

#include <string_view>

namespace mpmsim {

enum class LogLevel { Debug = 0, Info = 1, Warning = 2, Silent = 3 };

/// Process-wide threshold; messages below it are dropped. Default Info.
void set_log_level(LogLevel level) noexcept;
LogLevel log_level() noexcept;

void log_info(std::string_view message);
void log_warning(std::string_view message);

}  // namespace mpmsim
