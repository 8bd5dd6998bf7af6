#pragma once

#include <string_view>

namespace spnas {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2 };

/// Process-wide threshold for the stderr logger; Warn by default.
void set_log_level(LogLevel level);
LogLevel log_level();

void log_warn(std::string_view message);
void log_info(std::string_view message);

} // namespace spnas
