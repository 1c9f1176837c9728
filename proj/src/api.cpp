#include "foglet/api.hpp"

#include <cctype>
#include <cmath>

#include <httplib.h>

#include "foglet/logging.hpp"

namespace foglet {

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void not_found(httplib::Response& res, const std::string& what) {
  reply(res, 404, {{"error", "not_found"}, {"detail", what}});
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    reply(res, 400, {{"error", "validation"}, {"field", ""}, {"reason", "malformed JSON"}});
    return std::nullopt;
  }
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

ApiServer::ApiServer(Engine& engine) : engine_(engine), http_(std::make_unique<httplib::Server>()) {
  routes();
  worker_ = std::thread([this] { worker(); });
}

ApiServer::~ApiServer() {
  stop();
  if (worker_.joinable()) worker_.join();
}

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return http_->bind_to_any_port(host);
  return http_->bind_to_port(host, port) ? port : -1;
}

void ApiServer::listen() { http_->listen_after_bind(); }

void ApiServer::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  http_->stop();
}

void ApiServer::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [&] { return stopping_ || (!busy_ && !engine_.has_pending()); });
}

void ApiServer::worker() {
  std::unique_lock lock(mutex_);
  while (true) {
    wake_.wait(lock, [&] { return stopping_ || engine_.has_pending(); });
    if (stopping_) break;
    busy_ = true;
    lock.unlock();
    engine_.process();
    lock.lock();
    busy_ = false;
    idle_.notify_all();
  }
  idle_.notify_all();
}

void ApiServer::routes() {
  auto& s = *http_;

  s.Post("/v1/requests", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    try {
      const std::string id = engine_.submit(*body);
      log_event(spdlog::level::info, "request queued", {{"request_id", id}});
      reply(res, 202, {{"id", id}, {"state", "Queued"}});
      {
        std::lock_guard lock(mutex_);
      }
      wake_.notify_one();
    } catch (const ValidationError& e) {
      const bool unknown = e.kind == ValidationError::Kind::UnknownReference;
      reply(res, unknown ? 422 : 400,
            {{"error", unknown ? "unknown_reference" : "validation"}, {"field", e.field}, {"reason", e.reason}});
    }
  });

  s.Get("/v1/requests", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, engine_.requests_json());
  });

  s.Get(R"(/v1/requests/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto status = engine_.request_status(req.matches[1]);
    if (!status) return not_found(res, "request " + std::string(req.matches[1]));
    reply(res, 200, *status);
  });

  s.Get(R"(/v1/requests/([^/]+)/explain)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto trace = engine_.explain(req.matches[1]);
    if (!trace) return not_found(res, "no decision for " + std::string(req.matches[1]));
    reply(res, 200, *trace);
  });

  s.Get("/v1/nodes", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, engine_.nodes_json());
  });

  s.Get("/v1/placements", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, engine_.placements_json());
  });

  s.Get("/v1/report", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, engine_.report_json());
  });

  s.Get(R"(/v1/links/([^/]+)/utilization)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto u = engine_.link_utilization(req.matches[1]);
    if (!u) return not_found(res, "link " + std::string(req.matches[1]));
    reply(res, 200, *u);
  });

  s.Post("/v1/events", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    std::string link;
    for (const char* key : {"link_id", "link-id", "link"})
      if (body->contains(key) && body->at(key).is_string()) link = body->at(key).get<std::string>();
    const std::string state =
        body->contains("state") && body->at("state").is_string() ? lower(body->at("state").get<std::string>()) : "";
    if (link.empty() || (state != "up" && state != "down"))
      return reply(res, 400, {{"error", "validation"}, {"field", link.empty() ? "link_id" : "state"},
                              {"reason", "expected {link_id, state: up|down}"}});
    try {
      const bool changed = engine_.set_link_state(link, state == "up");
      log_event(spdlog::level::info, "link state", {{"link", link}, {"state", state}, {"changed", changed}});
      reply(res, 200, {{"link", link}, {"state", state}, {"changed", changed}});
    } catch (const TopologyError& e) {
      not_found(res, e.what());
    }
  });

  s.Post("/v1/clock/advance", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    const json* seconds = body->contains("seconds") ? &body->at("seconds") : nullptr;
    if (!seconds || !seconds->is_number() || !(seconds->get<double>() > 0))
      return reply(res, 400, {{"error", "validation"}, {"field", "seconds"}, {"reason", "expected a positive number"}});
    engine_.advance(Millis(std::llround(seconds->get<double>() * 1000.0)));
    reply(res, 200, {{"now_ms", engine_.now().count()}});
  });
}

}  // namespace foglet
