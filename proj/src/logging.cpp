#include "foglet/logging.hpp"

#include <atomic>

#include <spdlog/sinks/stdout_sinks.h>

namespace foglet {

namespace {
std::atomic<LogFormat> g_format{LogFormat::Text};
}

void init_logging(LogFormat format, spdlog::level::level_enum level) {
  g_format = format;
  auto logger = std::make_shared<spdlog::logger>(
      "foglet", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  if (format == LogFormat::Json)
    logger->set_pattern(R"({"ts":"%Y-%m-%dT%H:%M:%S.%eZ","level":"%l",%v})", spdlog::pattern_time_type::utc);
  else
    logger->set_pattern("%Y-%m-%d %H:%M:%S.%e %-5l %v");
  logger->set_level(level);
  spdlog::set_default_logger(std::move(logger));
}

void log_event(spdlog::level::level_enum level, const std::string& message, const json& fields) {
  if (!spdlog::default_logger()->should_log(level)) return;
  if (g_format == LogFormat::Json) {
    json body = fields;
    body["msg"] = message;
    const std::string dumped = body.dump();
    spdlog::log(level, "{}", std::string_view(dumped).substr(1, dumped.size() - 2));
    return;
  }
  std::string line = message;
  for (const auto& [key, value] : fields.items())
    line += " " + key + "=" + (value.is_string() ? value.get<std::string>() : value.dump());
  spdlog::log(level, "{}", line);
}

}  // namespace foglet
