#include "spnas/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace spnas {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_mutex;

void emit(std::string_view tag, std::string_view message) {
    std::lock_guard lock(g_mutex);
    std::cerr << "[spnas] " << tag << ": " << message << '\n';
}
} // namespace

void set_log_level(LogLevel level) { g_level.store(level); }
LogLevel log_level() { return g_level.load(); }

void log_warn(std::string_view message) {
    if (g_level.load() >= LogLevel::Warn)
        emit("warn", message);
}

void log_info(std::string_view message) {
    if (g_level.load() >= LogLevel::Info)
        emit("info", message);
}

} // namespace spnas
