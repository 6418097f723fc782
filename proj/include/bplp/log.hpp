#pragma once

#include <string>

namespace bplp {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();
/// Writes "[bplp level] message" to stderr when level is enabled.
void log(LogLevel level, const std::string& message);

}  // namespace bplp
