#pragma once

#include <functional>
#include <string>

namespace laoc {

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replaces the process-wide sink (default: stderr). Pass an empty function to
/// silence diagnostics. Returns the previous sink.
LogSink set_log_sink(LogSink sink);

void log(LogLevel level, const std::string& message);
inline void log_warning(const std::string& message) { log(LogLevel::Warning, message); }
inline void log_info(const std::string& message) { log(LogLevel::Info, message); }

} // namespace laoc
