#pragma once

#include <string>

#include <spdlog/spdlog.h>

#include "foglet/model.hpp"

namespace foglet {

enum class LogFormat { Text, Json };

// Routes spdlog's default logger to stderr in the chosen format.
void init_logging(LogFormat format, spdlog::level::level_enum level = spdlog::level::info);

// One log line: `message key=value ...` as text, or a flat JSON object.
void log_event(spdlog::level::level_enum level, const std::string& message,
               const json& fields = json::object());

}  // namespace foglet
