#include "foglet/scenario.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <set>
#include <unistd.h>

#include <fmt/format.h>

#include "foglet/documents.hpp"

namespace foglet {

namespace {

const std::set<std::string> kStepKinds = {
    "submit",          "advance",       "link_down",      "link_up", "evict_node",
    "assert_placement", "assert_metric", "assert_outcome", "report",  "restart"};

bool kind_known(const std::string& kind) { return kStepKinds.contains(kind); }

struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json resolve(const json& value, const std::filesystem::path& base, const char* what) {
  if (value.is_string()) return load_document(base / value.get<std::string>());
  if (value.is_object()) return value;
  throw DocumentError(fmt::format("{} must be a path or a mapping", what));
}

std::pair<std::string, json> step_parts(const json& step) {
  if (step.is_string()) return {step.get<std::string>(), nullptr};
  return {step.begin().key(), step.begin().value()};
}

Millis seconds(const json& v) {
  if (!v.is_number()) throw DocumentError("advance expects a number of seconds");
  const double s = v.get<double>();
  if (!(s > 0)) throw DocumentError("advance expects a positive duration");
  return Millis(std::llround(s * 1000.0));
}

bool compare(double lhs, const std::string& op, double rhs, double tolerance) {
  if (op == "==") return std::abs(lhs - rhs) <= tolerance;
  if (op == "!=") return std::abs(lhs - rhs) > tolerance;
  if (op == "<") return lhs < rhs;
  if (op == "<=") return lhs <= rhs + tolerance;
  if (op == ">") return lhs > rhs;
  if (op == ">=") return lhs >= rhs - tolerance;
  throw DocumentError("unknown comparator " + op);
}

json metric_root(const Engine& engine) {
  json root = engine.report_json();
  json requests = json::object();
  for (const auto& r : engine.requests_json()) requests[r.at("id").get<std::string>()] = r;
  root["requests"] = requests;
  return root;
}

std::filesystem::path checkpoint_file(const std::filesystem::path& dir) {
  static std::atomic<unsigned> counter{0};
  return dir / fmt::format("foglet-{}-{}.ckpt", ::getpid(), counter++);
}

class Runner {
 public:
  Runner(const ScenarioScript& script, const RunOptions& options, ScenarioOutcome& out)
      : script_(script), options_(options), out_(out) {}

  void run() {
    const json topo_doc = options_.topology.value_or(script_.topology);
    const json config_doc = options_.config.value_or(script_.config);
    engine_ = std::make_unique<Engine>(Topology::load(topo_doc), load_config(config_doc));
    engine_->enable_timeseries(options_.timeseries);
    for (std::size_t i = 0; i < script_.steps.size(); ++i) {
      step_ = i;
      const auto [kind, arg] = step_parts(script_.steps[i]);
      execute(kind, arg);
    }
  }

  void finish() {
    if (!engine_) return;
    out_.decisions = engine_->decisions_json();
    out_.final_report = engine_->report_json();
    out_.link_csv = engine_->link_timeseries_csv();
    out_.flow_csv = engine_->flow_timeseries_csv();
  }

  std::size_t step() const { return step_; }

 private:
  void log(const std::string& line) { out_.log.push_back(fmt::format("[{}] {}", step_ + 1, line)); }

  void execute(const std::string& kind, const json& arg) {
    if (kind == "submit") {
      engine_->submit(arg);
      for (const auto& d : engine_->process()) {
        if (d.outcome == "Placed")
          log(fmt::format("submit {} -> Placed on {}", d.request_id, d.candidate));
        else
          log(fmt::format("submit {} -> Rejected ({} reasons)", d.request_id, d.reasons.size()));
      }
    } else if (kind == "advance") {
      const Millis dt = seconds(arg);
      engine_->advance(dt);
      log(fmt::format("advance {} ms -> t={} ms", dt.count(), engine_->now().count()));
    } else if (kind == "link_down" || kind == "link_up") {
      const bool up = kind == "link_up";
      const bool changed = engine_->set_link_state(arg.get<std::string>(), up);
      log(fmt::format("{} {}{}", kind, arg.get<std::string>(), changed ? "" : " (no change)"));
    } else if (kind == "evict_node") {
      const auto evicted = engine_->evict_node(arg.get<std::string>());
      log(fmt::format("evict_node {} -> {} placements", arg.get<std::string>(), evicted.size()));
    } else if (kind == "assert_placement") {
      assert_placement(arg);
    } else if (kind == "assert_metric") {
      assert_metric(arg);
    } else if (kind == "assert_outcome") {
      assert_outcome(arg);
    } else if (kind == "report") {
      out_.reports.push_back(engine_->report_json());
      log(fmt::format("report at t={} ms", engine_->now().count()));
    } else if (kind == "restart") {
      const auto file = checkpoint_file(options_.checkpoint_dir);
      engine_->save(file);
      engine_.reset();
      engine_ = Engine::load(file);
      std::filesystem::remove(file);
      log("restart from checkpoint");
    }
  }

  void assert_placement(const json& arg) {
    const auto component = arg.at("component").get<std::string>();
    const auto tenant = arg.value("tenant", std::string("default"));
    const auto placement = engine_->placement_of(component, tenant);
    const json& want = arg.at("node");
    const std::string got = placement ? placement->node_id : "<none>";
    const bool ok = want.is_null() ? !placement : placement && got == want.get<std::string>();
    const std::string line = fmt::format("assert_placement {} on {} (got {})", component,
                                         want.is_null() ? "<none>" : want.get<std::string>(), got);
    check(ok, line);
  }

  void assert_metric(const json& arg) {
    const auto selector = arg.at("selector").get<std::string>();
    const auto op = arg.value("op", std::string("=="));
    const double tolerance = arg.value("tolerance", 0.0);
    const json root = metric_root(*engine_);
    const json* lhs = select(root, selector);
    if (!lhs || !lhs->is_number()) throw AssertionFailure(fmt::format("no numeric metric at {}", selector));
    const json& value = arg.at("value");
    double rhs = 0;
    std::string rhs_text;
    if (value.is_object()) {
      const auto other = value.at("selector").get<std::string>();
      const json* r = select(root, other);
      if (!r || !r->is_number()) throw AssertionFailure(fmt::format("no numeric metric at {}", other));
      rhs = r->get<double>();
      rhs_text = fmt::format("{} ({})", other, rhs);
    } else {
      rhs = value.get<double>();
      rhs_text = fmt::format("{}", rhs);
    }
    const double got = lhs->get<double>();
    check(compare(got, op, rhs, tolerance),
          fmt::format("assert_metric {} {} {} (got {})", selector, op, rhs_text, got));
  }

  void assert_outcome(const json& arg) {
    const auto id = arg.at("request").get<std::string>();
    const auto status = engine_->request_status(id);
    if (!status) throw AssertionFailure("unknown request " + id);
    const auto want = arg.at("state").get<std::string>();
    const auto got = status->at("state").get<std::string>();
    bool ok = got == want;
    if (ok && arg.contains("reason_contains")) {
      const auto needle = arg.at("reason_contains").get<std::string>();
      ok = status->contains("reasons") && status->at("reasons").dump().find(needle) != std::string::npos;
    }
    check(ok, fmt::format("assert_outcome {} is {} (got {})", id, want, got));
  }

  void check(bool ok, const std::string& line) {
    log((ok ? "ok   " : "FAIL ") + line);
    if (!ok) throw AssertionFailure(line);
  }

  const ScenarioScript& script_;
  const RunOptions& options_;
  ScenarioOutcome& out_;
  std::unique_ptr<Engine> engine_;
  std::size_t step_ = 0;
};

}  // namespace

ScenarioScript ScenarioScript::load(const std::filesystem::path& path) {
  return from_json(load_document(path), path.parent_path());
}

ScenarioScript ScenarioScript::from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw DocumentError("scenario must be a mapping");
  ScenarioScript s;
  s.name = doc.value("name", std::string("scenario"));
  if (!doc.contains("topology")) throw DocumentError("scenario needs a topology");
  s.topology = resolve(doc.at("topology"), base_dir, "topology");
  if (doc.contains("config") && !doc.at("config").is_null())
    s.config = resolve(doc.at("config"), base_dir, "config");
  if (!doc.contains("steps") || !doc.at("steps").is_array())
    throw DocumentError("scenario needs a list of steps");
  for (const auto& step : doc.at("steps")) {
    const bool single_key = step.is_object() && step.size() == 1;
    if (!step.is_string() && !single_key)
      throw DocumentError("each step is a name or a single-key mapping: " + step.dump());
    const auto [kind, arg] = step_parts(step);
    if (!kind_known(kind)) throw DocumentError("unknown step " + kind);
    if (kind == "submit" && arg.is_string()) {
      s.steps.push_back({{"submit", load_document(base_dir / arg.get<std::string>())}});
    } else {
      s.steps.push_back(step);
    }
  }
  return s;
}

int ScenarioOutcome::exit_code() const {
  switch (status) {
    case Status::Passed: return 0;
    case Status::EngineError: return 1;
    case Status::InvalidScript: return 2;
    case Status::AssertionFailed: return 3;
  }
  return 1;
}

std::string ScenarioOutcome::transcript() const {
  json j = {{"decisions", decisions}, {"reports", reports}, {"final_report", final_report}};
  return j.dump(2);
}

ScenarioOutcome run_scenario(const ScenarioScript& script, const RunOptions& options) {
  ScenarioOutcome out;
  Runner runner(script, options, out);
  auto fail = [&](ScenarioOutcome::Status status, const std::string& what) {
    out.status = status;
    out.message = fmt::format("step {}: {}", runner.step() + 1, what);
  };
  try {
    runner.run();
  } catch (const AssertionFailure& e) {
    fail(ScenarioOutcome::Status::AssertionFailed, e.what());
  } catch (const ValidationError& e) {
    fail(ScenarioOutcome::Status::InvalidScript, fmt::format("invalid request: {}: {}", e.field, e.reason));
  } catch (const DocumentError& e) {
    fail(ScenarioOutcome::Status::InvalidScript, e.what());
  } catch (const json::exception& e) {
    fail(ScenarioOutcome::Status::InvalidScript, e.what());
  } catch (const std::exception& e) {
    fail(ScenarioOutcome::Status::EngineError, e.what());
  }
  runner.finish();
  return out;
}

const json* select(const json& root, const std::string& selector) {
  const json* cur = &root;
  std::size_t start = 0;
  while (start <= selector.size()) {
    const auto dot = selector.find('.', start);
    const std::string part = selector.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (cur->is_object()) {
      const auto it = cur->find(part);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array()) {
      std::size_t idx = 0;
      const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
      if (ec != std::errc() || p != part.data() + part.size() || idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    } else {
      return nullptr;
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

}  // namespace foglet
