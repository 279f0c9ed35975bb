#include "laoc/log.hpp"

#include <iostream>
#include <mutex>

namespace laoc {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

LogSink& sink() {
    static LogSink s = [](LogLevel level, const std::string& message) {
        std::cerr << (level == LogLevel::Warning ? "[warn] " : "[info] ") << message << '\n';
    };
    return s;
}

} // namespace

LogSink set_log_sink(LogSink next) {
    std::lock_guard lock(sink_mutex());
    auto previous = std::move(sink());
    sink() = std::move(next);
    return previous;
}

void log(LogLevel level, const std::string& message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(level, message);
}

} // namespace laoc
