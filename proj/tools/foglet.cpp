#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>

#include "foglet/api.hpp"
#include "foglet/documents.hpp"
#include "foglet/engine.hpp"
#include "foglet/logging.hpp"
#include "foglet/record_log.hpp"
#include "foglet/scenario.hpp"

namespace fs = std::filesystem;
using namespace foglet;

namespace {

enum Exit : int { kOk = 0, kEngineError = 1, kUsageError = 2, kAssertionFailed = 3 };

// Input the user handed us is wrong (bad file, bad document, missing state).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string topology;
  std::string listen = "127.0.0.1:8080";
  std::string log_format = "text";
  std::string state = "foglet.state";
};

EngineConfig engine_config(const Options& o) {
  if (o.config.empty()) return {};
  return load_config(load_document(o.config));
}

std::unique_ptr<Engine> open_state(const Options& o) {
  if (!fs::exists(o.state)) throw UsageError("no engine state at " + o.state + "; run `foglet load` first");
  return Engine::load(o.state);
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

void audit(const DecisionRecord& d) {
  json fields = d.to_json();
  fields.erase("trace");
  log_event(spdlog::level::info, "decision", fields);
}

int cmd_load(const Options& o, const std::string& topology_path) {
  const std::string path = topology_path.empty() ? o.topology : topology_path;
  if (path.empty()) throw UsageError("load needs a topology file");
  Engine engine(Topology::load(load_document(path)), engine_config(o));
  engine.save(o.state);
  log_event(spdlog::level::info, "state created", {{"state", o.state}, {"topology", path}});
  print({{"state", o.state},
         {"nodes", engine.topology().nodes().size()},
         {"links", engine.topology().links().size()},
         {"endpoints", engine.topology().endpoints().size()}});
  return kOk;
}

int cmd_submit(const Options& o, const std::string& request_path) {
  auto engine = open_state(o);
  engine->set_audit_sink(audit);
  const std::string id = engine->submit(load_document(request_path));
  engine->process();
  engine->save(o.state);
  print(*engine->request_status(id));
  return kOk;
}

int cmd_status(const Options& o, const std::string& id) {
  auto engine = open_state(o);
  if (id.empty()) {
    print({{"now_ms", engine->now().count()},
           {"requests", engine->requests_json()},
           {"placements", engine->placements_json()},
           {"nodes", engine->nodes_json()}});
    return kOk;
  }
  const auto status = engine->request_status(id);
  if (!status) throw EngineError("unknown request " + id);
  print(*status);
  return kOk;
}

int cmd_explain(const Options& o, const std::string& id) {
  auto engine = open_state(o);
  const auto trace = engine->explain(id);
  if (!trace) throw EngineError("no decision recorded for " + id);
  print(*trace);
  return kOk;
}

int cmd_report(const Options& o) {
  print(open_state(o)->report_json());
  return kOk;
}

int cmd_event(const Options& o, const std::string& link, const std::string& state) {
  auto engine = open_state(o);
  const bool changed = engine->set_link_state(link, state == "up");
  engine->save(o.state);
  print({{"link", link}, {"state", state}, {"changed", changed}});
  return kOk;
}

int cmd_advance(const Options& o, double seconds) {
  auto engine = open_state(o);
  engine->advance(Millis(std::llround(seconds * 1000.0)));
  engine->save(o.state);
  print({{"now_ms", engine->now().count()}});
  return kOk;
}

int cmd_run(const Options& o, const std::string& script_path, const std::string& csv_dir) {
  const auto script = ScenarioScript::load(script_path);
  RunOptions run;
  if (!o.config.empty()) run.config = load_document(o.config);
  if (!o.topology.empty()) run.topology = load_document(o.topology);
  run.timeseries = !csv_dir.empty();
  const auto outcome = run_scenario(script, run);
  for (const auto& line : outcome.log) std::cout << line << "\n";
  if (!outcome.final_report.is_null()) print(outcome.final_report);
  if (!csv_dir.empty()) {
    fs::create_directories(csv_dir);
    std::ofstream(fs::path(csv_dir) / "links.csv") << outcome.link_csv;
    std::ofstream(fs::path(csv_dir) / "flows.csv") << outcome.flow_csv;
  }
  if (outcome.status != ScenarioOutcome::Status::Passed)
    log_event(spdlog::level::err, "scenario failed", {{"scenario", script.name}, {"detail", outcome.message}});
  else
    log_event(spdlog::level::info, "scenario passed", {{"scenario", script.name}});
  return outcome.exit_code();
}

int cmd_serve(const Options& o) {
  const auto colon = o.listen.rfind(':');
  if (colon == std::string::npos) throw UsageError("--listen expects host:port");
  const std::string host = o.listen.substr(0, colon);
  const int port = std::stoi(o.listen.substr(colon + 1));

  std::unique_ptr<Engine> engine;
  if (!o.topology.empty())
    engine = std::make_unique<Engine>(Topology::load(load_document(o.topology)), engine_config(o));
  else
    engine = open_state(o);
  engine->set_audit_sink(audit);

  // Signals are taken synchronously by one thread so shutdown can save state.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ApiServer server(*engine);
  const int bound = server.bind(host, port);
  if (bound < 0) throw EngineError("cannot listen on " + o.listen);
  log_event(spdlog::level::info, "listening", {{"host", host}, {"port", bound}});

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    log_event(spdlog::level::info, "shutting down", {{"signal", sig}});
    server.stop();
  });
  server.listen();
  server.stop();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  engine->save(o.state);
  log_event(spdlog::level::info, "state saved", {{"state", o.state}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deployment negotiation, placement and flow simulation for fog infrastructures"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "Engine configuration file")->envname("FOGLET_CONFIG");
  app.add_option("--topology", o.topology, "Topology file");
  app.add_option("--listen", o.listen, "host:port for serve")->capture_default_str();
  app.add_option("--log-format", o.log_format, "Log format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  app.add_option("--state", o.state, "Engine state file")->capture_default_str();

  std::string positional, second, csv_dir;
  double seconds = 0;

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  auto* load = app.add_subcommand("load", "Create engine state from a topology");
  load->add_option("topology", positional, "Topology file");
  auto* submit = app.add_subcommand("submit", "Submit a request and process it");
  submit->add_option("request", positional, "Request file")->required();
  auto* status = app.add_subcommand("status", "Show requests, placements and nodes");
  status->add_option("request-id", positional, "Only this request");
  auto* explain = app.add_subcommand("explain", "Show the filter and scoring trace of a decision");
  explain->add_option("request-id", positional)->required();
  auto* run = app.add_subcommand("run", "Execute a scenario script");
  run->add_option("scenario", positional, "Scenario file")->required();
  run->add_option("--csv", csv_dir, "Write links.csv and flows.csv time series to this directory");
  auto* report = app.add_subcommand("report", "Print the metrics report");
  auto* event = app.add_subcommand("event", "Set a link up or down");
  event->add_option("link", positional)->required();
  event->add_option("state", second)->required()->check(CLI::IsMember({"up", "down"}));
  auto* advance = app.add_subcommand("advance", "Advance the virtual clock");
  advance->add_option("seconds", seconds)->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  init_logging(o.log_format == "json" ? LogFormat::Json : LogFormat::Text);
  try {
    if (*serve) return cmd_serve(o);
    if (*load) return cmd_load(o, positional);
    if (*submit) return cmd_submit(o, positional);
    if (*status) return cmd_status(o, positional);
    if (*explain) return cmd_explain(o, positional);
    if (*run) return cmd_run(o, positional, csv_dir);
    if (*report) return cmd_report(o);
    if (*event) return cmd_event(o, positional, second);
    if (*advance) return cmd_advance(o, seconds);
  } catch (const UsageError& e) {
    log_event(spdlog::level::err, e.what());
    return kUsageError;
  } catch (const DocumentError& e) {
    log_event(spdlog::level::err, "invalid document", {{"detail", e.what()}});
    return kUsageError;
  } catch (const ValidationError& e) {
    log_event(spdlog::level::err, "invalid request", {{"field", e.field}, {"reason", e.reason}});
    return kUsageError;
  } catch (const TopologyError& e) {
    log_event(spdlog::level::err, "topology error", {{"detail", e.what()}});
    return e.kind == TopologyError::Kind::UnknownId ? kEngineError : kUsageError;
  } catch (const std::invalid_argument& e) {
    log_event(spdlog::level::err, "invalid configuration", {{"detail", e.what()}});
    return kUsageError;
  } catch (const std::exception& e) {
    log_event(spdlog::level::err, "engine error", {{"detail", e.what()}});
    return kEngineError;
  }
  return kUsageError;
}
