#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "foglet/engine.hpp"

namespace foglet {

// An ordered, executable script against a fresh engine.
//
//   name: usecase_b
//   topology: ../topologies/reference.yaml   # path (relative to the script) or inline mapping
//   config: {...}                            # optional, path or inline
//   steps:
//     - submit: {id: r1, component: ..., requirements: [...]}   # or a request file path
//     - advance: 60                          # seconds of virtual time
//     - link_down: wan
//     - link_up: wan
//     - evict_node: cloudlet
//     - assert_placement: {component: face_detection, node: cloudlet}
//     - assert_metric: {selector: links.wan.offered_mbps, op: "==", value: 0.2}
//     - assert_outcome: {request: r3, state: Rejected, reason_contains: InsufficientResources}
//     - report
//     - restart                              # checkpoint, drop the engine, resume from disk
struct ScenarioScript {
  std::string name;
  json topology;
  json config;  // null when absent
  std::vector<json> steps;

  // Throws DocumentError for unreadable or ill-formed scripts.
  static ScenarioScript load(const std::filesystem::path& path);
  static ScenarioScript from_json(const json& doc,
                                  const std::filesystem::path& base_dir = std::filesystem::path("."));
};

struct RunOptions {
  std::optional<json> topology;  // replaces the script's topology
  std::optional<json> config;    // replaces the script's config
  bool timeseries = false;
  std::filesystem::path checkpoint_dir = std::filesystem::temp_directory_path();
};

struct ScenarioOutcome {
  enum class Status { Passed, AssertionFailed, EngineError, InvalidScript };
  Status status = Status::Passed;
  std::string message;
  std::vector<std::string> log;  // one line per executed step
  json decisions = json::array();
  std::vector<json> reports;
  json final_report;
  std::string link_csv;
  std::string flow_csv;

  int exit_code() const;
  // Outcome stream plus every report, for byte-for-byte comparison of runs.
  std::string transcript() const;
};

ScenarioOutcome run_scenario(const ScenarioScript& script, const RunOptions& options = {});

// Dotted lookup ("links.wan.offered_mbps"); numeric parts index arrays.
const json* select(const json& root, const std::string& selector);

}  // namespace foglet
