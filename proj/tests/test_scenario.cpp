#include <gtest/gtest.h>

#include "foglet/scenario.hpp"
#include "support.hpp"

using namespace foglet;

namespace {

std::filesystem::path scenario_path(const std::string& name) {
  return test::source_dir() / "scenarios" / (name + ".yaml");
}

ScenarioOutcome run_inline(const std::string& yaml) {
  return run_scenario(ScenarioScript::from_json(parse_document(yaml), test::source_dir() / "scenarios"));
}

}  // namespace

TEST(Documents, ScalarTyping) {
  const auto j = parse_document(R"(
a: 1
b: 2.5
c: true
d: ~
e: "42"
f: camera-1
g: 1e3
h: [1, two, '3']
i: -0.2
)");
  EXPECT_EQ(j["a"], 1);
  EXPECT_TRUE(j["a"].is_number_integer());
  EXPECT_EQ(j["b"], 2.5);
  EXPECT_EQ(j["c"], true);
  EXPECT_TRUE(j["d"].is_null());
  EXPECT_EQ(j["e"], "42");
  EXPECT_EQ(j["f"], "camera-1");
  EXPECT_EQ(j["g"], 1000.0);
  EXPECT_EQ(j["h"], json::parse(R"([1, "two", "3"])"));
  EXPECT_EQ(j["i"], -0.2);
}

TEST(Documents, JsonIsAcceptedVerbatim) {
  const json doc = test::request_doc("face_detection_svs");
  EXPECT_EQ(parse_document(doc.dump()), doc);
}

TEST(Documents, BadInputNamesTheOrigin) {
  try {
    parse_document("a: [1, 2\nb: {", "broken.yaml");
    FAIL();
  } catch (const DocumentError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.yaml"), std::string::npos);
  }
  EXPECT_THROW(load_document("/nonexistent/file.yaml"), DocumentError);
}

TEST(Select, DottedPathsAndArrays) {
  const json root = json::parse(R"({"links": {"wan": {"offered_mbps": 4}}, "xs": [10, {"y": 2}],
                                    "flows": {"a->b": {"bits": 1}}})");
  EXPECT_EQ(*select(root, "links.wan.offered_mbps"), 4);
  EXPECT_EQ(*select(root, "xs.1.y"), 2);
  EXPECT_EQ(*select(root, "flows.a->b.bits"), 1);
  EXPECT_EQ(select(root, "links.lan"), nullptr);
  EXPECT_EQ(select(root, "xs.7"), nullptr);
}

TEST(Scenario, ShippedScriptsPass) {
  for (const char* name : {"usecase_a", "usecase_b", "usecase_c", "usecase_a_degradation", "usecase_b_degradation",
                           "usecase_a_fault", "usecase_c_restart"}) {
    const auto outcome = run_scenario(ScenarioScript::load(scenario_path(name)));
    EXPECT_EQ(outcome.status, ScenarioOutcome::Status::Passed) << name << ": " << outcome.message;
    EXPECT_EQ(outcome.exit_code(), 0) << name;
  }
}

TEST(Scenario, WrongPlacementFailsTheAssertion) {
  const auto outcome = run_scenario(ScenarioScript::load(scenario_path("wrong_placement")));
  EXPECT_EQ(outcome.status, ScenarioOutcome::Status::AssertionFailed);
  EXPECT_EQ(outcome.exit_code(), 3);
  EXPECT_NE(outcome.log.back().find("FAIL"), std::string::npos);
}

TEST(Scenario, StepsStopAtTheFirstFailure) {
  const auto outcome = run_inline(R"(
name: stop
topology: ../topologies/reference.yaml
steps:
  - submit: ../requests/face_store.yaml
  - assert_placement: {component: face_store, node: gateway}
  - link_down: wan
)");
  EXPECT_EQ(outcome.status, ScenarioOutcome::Status::AssertionFailed);
  EXPECT_EQ(outcome.log.size(), 2u);
}

TEST(Scenario, MetricOperatorsAndTolerance) {
  const auto outcome = run_inline(R"(
name: ops
topology: ../topologies/reference.yaml
steps:
  - submit: ../requests/face_store.yaml
  - submit: ../requests/face_detection.yaml
  - assert_metric: {selector: links.wan.offered_mbps, op: ">=", value: 4}
  - assert_metric: {selector: links.wan.offered_mbps, op: "<", value: 4.5}
  - assert_metric: {selector: links.wan.offered_mbps, op: "!=", value: 3}
  - assert_metric: {selector: links.wan.utilization, op: "==", value: 2.001, tolerance: 0.01}
  - assert_metric: {selector: links.lan-gw.offered_mbps, op: "<=", value: 0}
  - assert_outcome: {request: face_detection, state: Placed}
  - assert_placement: {component: face_detection, node: cloud}
  - assert_placement: {component: nothing_here, node: null}
)");
  EXPECT_EQ(outcome.status, ScenarioOutcome::Status::Passed) << outcome.message;
}

TEST(Scenario, BrokenScriptsAreRejected) {
  EXPECT_THROW(ScenarioScript::from_json(parse_document("name: x\nsteps: [{teleport: 3}]\ntopology: ../topologies/reference.yaml"),
                                         test::source_dir() / "scenarios"),
               DocumentError);
  EXPECT_THROW(ScenarioScript::from_json(parse_document("name: x\nsteps: []"), test::source_dir()), DocumentError);
  EXPECT_THROW(ScenarioScript::load("/nonexistent/scenario.yaml"), DocumentError);
}

TEST(Scenario, EngineErrorsExitOne) {
  const auto outcome = run_inline(R"(
name: bad-link
topology: ../topologies/reference.yaml
steps:
  - link_down: nowhere
)");
  EXPECT_EQ(outcome.status, ScenarioOutcome::Status::EngineError);
  EXPECT_EQ(outcome.exit_code(), 1);
}

TEST(Scenario, InvalidRequestInsideScriptExitsTwo) {
  const auto outcome = run_inline(R"(
name: bad-request
topology: ../topologies/reference.yaml
steps:
  - submit: {component: x, requirements: [{compute: {vcpus: -1}}]}
)");
  EXPECT_EQ(outcome.status, ScenarioOutcome::Status::InvalidScript);
  EXPECT_EQ(outcome.exit_code(), 2);
}

TEST(Scenario, TranscriptIsStableAcrossRuns) {
  for (const char* name : {"usecase_a", "usecase_b_degradation", "usecase_c", "usecase_a_fault"}) {
    const auto script = ScenarioScript::load(scenario_path(name));
    RunOptions options;
    options.timeseries = true;
    const auto a = run_scenario(script, options), b = run_scenario(script, options);
    EXPECT_EQ(a.transcript(), b.transcript()) << name;
    EXPECT_EQ(a.link_csv, b.link_csv) << name;
    EXPECT_EQ(a.flow_csv, b.flow_csv) << name;
    EXPECT_FALSE(a.link_csv.empty());
  }
}

TEST(Scenario, OverridesReplaceTopology) {
  auto topo = test::reference_topology_doc();
  for (auto& l : topo["links"])
    if (l["id"] == "wan") l["bandwidth_mbps"] = 10;
  RunOptions options;
  options.topology = topo;
  const auto outcome = run_scenario(ScenarioScript::load(scenario_path("usecase_a")), options);
  EXPECT_DOUBLE_EQ(select(outcome.final_report, "links.wan.utilization")->get<double>(), 0.4);
}
