// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <random>

#include <fmt/format.h>

#include "foglet/engine.hpp"
#include "foglet/flowsim.hpp"
#include "foglet/scenario.hpp"
#include "inventory_oracle.hpp"
#include "scheduler_oracle.hpp"

using namespace foglet;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

Verdict pass(std::string detail) { return {true, std::move(detail)}; }
Verdict fail(std::string detail) { return {false, std::move(detail)}; }

std::filesystem::path scenario_path(const std::string& name) {
  return test::source_dir() / "scenarios" / (name + ".yaml");
}

struct TimedRun {
  ScenarioOutcome outcome;
  double seconds = 0;
};

TimedRun run_named(const std::string& name) {
  const auto start = std::chrono::steady_clock::now();
  TimedRun r;
  r.outcome = run_scenario(ScenarioScript::load(scenario_path(name)));
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::map<std::string, std::string> placements(const json& report) {
  std::map<std::string, std::string> out;
  for (const auto& p : report.at("placements")) out[p.at("component")] = p.at("node");
  return out;
}

double wan_offered(const json& report) { return report.at("links").at("wan").at("offered_mbps").get<double>(); }

// Declared rate of the first flow in a request file, in kbit/s.
std::int64_t declared_rate_kbps(const std::string& request, const std::string& peer) {
  const auto doc = test::request_doc(request);
  for (const auto& f : doc.at("component").at("flows"))
    for (const char* dir : {"from", "to"})
      if (f.contains(dir) && f.at(dir).items().begin().value() == peer)
        return std::llround(f.at("rate_mbps").get<double>() * 1000.0);
  throw std::runtime_error("no flow toward " + peer + " in " + request);
}

Verdict criterion_1() {
  const auto r = run_named("usecase_a");
  if (r.outcome.status != ScenarioOutcome::Status::Passed) return fail(r.outcome.message);
  const auto& report = r.outcome.final_report;
  auto where = placements(report);
  if (where["face_detection"] != "cloud" || where["face_store"] != "cloud")
    return fail(fmt::format("placements face_detection={}, face_store={}", where["face_detection"], where["face_store"]));
  const double expected = declared_rate_kbps("face_detection", "camera-1") / 1000.0;
  if (wan_offered(report) != expected) return fail(fmt::format("WAN offered {} Mbit/s, expected {}", wan_offered(report), expected));
  if (r.seconds >= 5.0) return fail(fmt::format("runtime {:.3f} s", r.seconds));
  return pass(fmt::format("both on cloud, WAN offered {} Mbit/s, {:.3f} s", wan_offered(report), r.seconds));
}

Verdict criterion_2() {
  const auto a = run_named("usecase_a");
  const auto b = run_named("usecase_b");
  if (b.outcome.status != ScenarioOutcome::Status::Passed) return fail(b.outcome.message);
  auto where = placements(b.outcome.final_report);
  if (where["face_detection"] != "cloudlet" || where["face_store"] != "cloud")
    return fail(fmt::format("placements face_detection={}, face_store={}", where["face_detection"], where["face_store"]));
  const double offered_a = wan_offered(a.outcome.final_report), offered_b = wan_offered(b.outcome.final_report);
  const double expected_b = declared_rate_kbps("face_detection_svs", "face_store") / 1000.0;
  if (offered_b != expected_b) return fail(fmt::format("WAN offered {} Mbit/s, expected {}", offered_b, expected_b));
  const double expected_ratio = static_cast<double>(declared_rate_kbps("face_detection", "camera-1")) /
                                static_cast<double>(declared_rate_kbps("face_detection_svs", "face_store"));
  const double ratio = offered_a / offered_b;
  if (ratio < 10.0 || ratio != expected_ratio) return fail(fmt::format("reduction {}x, expected {}x", ratio, expected_ratio));
  if (b.seconds >= 5.0) return fail(fmt::format("runtime {:.3f} s", b.seconds));
  return pass(fmt::format("detection on cloudlet, store on cloud, WAN {} Mbit/s ({}x less), {:.3f} s", offered_b, ratio, b.seconds));
}

Verdict criterion_3() {
  auto second_app = [](const std::string& detection) {
    Engine e(Topology::load(test::reference_topology_doc()), {});
    e.submit(test::request_doc("face_store"));
    e.submit(test::request_doc(detection));
    e.process();
    e.submit(test::request_doc("face_detection_2"));
    return e.process().at(0);
  };
  const auto after_b = second_app("face_detection_svs");
  if (after_b.outcome != "Placed") return fail("after use case B: " + after_b.outcome);
  const auto after_a = second_app("face_detection");
  if (after_a.outcome != "Rejected") return fail("after use case A: " + after_a.outcome);
  bool network_reason = false;
  for (const auto& r : after_a.reasons)
    network_reason |= r.detail.find("InsufficientResources: bandwidth") != std::string::npos;
  if (!network_reason) return fail("rejection lacks a bandwidth reason");
  for (const char* name : {"usecase_a_degradation", "usecase_b_degradation"}) {
    const auto r = run_named(name);
    if (r.outcome.status != ScenarioOutcome::Status::Passed) return fail(std::string(name) + ": " + r.outcome.message);
  }
  return pass(fmt::format("after B: Placed on {}; after A: Rejected ({})", after_b.candidate, after_a.reasons.front().detail));
}

Verdict criterion_4() {
  const auto c = run_named("usecase_c");
  if (c.outcome.status != ScenarioOutcome::Status::Passed) return fail(c.outcome.message);
  auto where = placements(c.outcome.final_report);
  if (where["anonymizer"] != "cloudlet" || where["analyzer"] != "cloud")
    return fail(fmt::format("placements anonymizer={}, analyzer={}", where["anonymizer"], where["analyzer"]));
  const auto& flow = c.outcome.final_report.at("flows").at("anonymizer->analyzer");
  const std::int64_t expected_peak = declared_rate_kbps("anonymizer", "analyzer") * 60'000;  // kbit/s * ms
  if (flow.at("bits_lost") != 0) return fail("bits lost: " + flow.at("bits_lost").dump());
  if (flow.at("bits_cached_peak") != expected_peak)
    return fail(fmt::format("peak {} bits, expected {}", flow.at("bits_cached_peak").dump(), expected_peak));
  if (flow.at("bits_delivered") != flow.at("bits_sourced")) return fail("delivered != sourced after restore");

  const auto a = run_named("usecase_a_fault");
  if (a.outcome.status != ScenarioOutcome::Status::Passed) return fail(a.outcome.message);
  const std::int64_t expected_loss = declared_rate_kbps("face_detection", "camera-1") * 60'000;
  const auto lost = a.outcome.final_report.at("flows").at("camera-1->face_detection").at("bits_lost");
  if (lost != expected_loss) return fail(fmt::format("A-layout loss {} bits, expected {}", lost.dump(), expected_loss));
  return pass(fmt::format("cached peak {} bits, lost 0, drained; A layout lost {} bits", expected_peak, expected_loss));
}

Verdict criterion_5() {
  test::OracleStats stats;
  if (auto problem = test::oracle_disagreement(1200, 20240501, &stats)) return fail(*problem);
  return pass(fmt::format("{} instances, {} feasible nodes, {} infeasible, 100% agreement", stats.instances,
                          stats.passed_nodes, stats.failed_nodes));
}

Verdict criterion_6() {
  test::InventoryRunStats stats;
  if (auto problem = test::random_inventory_ops(4242, 24, 600, &stats)) return fail(*problem);
  if (stats.ops < 10000) return fail(fmt::format("only {} ops", stats.ops));
  return pass(fmt::format("{} ops, {} failed holds left state unchanged", stats.ops, stats.failed_holds));
}

Verdict criterion_7() {
  int scripts = 0;
  for (const auto& entry : std::filesystem::directory_iterator(test::source_dir() / "scenarios")) {
    if (entry.path().extension() != ".yaml") continue;
    const auto script = ScenarioScript::load(entry.path());
    RunOptions options;
    options.timeseries = true;
    const auto first = run_scenario(script, options), second = run_scenario(script, options);
    if (first.transcript() != second.transcript() || first.link_csv != second.link_csv || first.flow_csv != second.flow_csv)
      return fail("replay differs: " + entry.path().filename().string());
    ++scripts;
  }
  if (scripts == 0) return fail("no scenario scripts found");
  return pass(fmt::format("{} scripts replayed byte-identically", scripts));
}

Verdict criterion_8() {
  std::size_t checks = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    std::mt19937_64 rng(seed);
    json doc = test::random_topology_doc(rng, 2 + static_cast<int>(seed % 7), static_cast<int>(seed % 3));
    std::uniform_int_distribution<int> pct(0, 100);
    for (auto& n : doc["nodes"]) n["cache_mib"] = pct(rng) < 50 ? pct(rng) / 3 : 0;
    const auto t = Topology::load(doc);
    FlowSim sim(t, 1.0 + pct(rng) / 50.0);
    std::uniform_int_distribution<NodeIndex> node(0, t.nodes().size() - 1);
    for (int i = 0; i < 6; ++i) {
      const auto a = node(rng), b = node(rng);
      FlowActivation f;
      f.source = "s" + std::to_string(i);
      f.sink = "k" + std::to_string(i);
      f.owner_request = f.source;
      f.source_is_component = pct(rng) < 70;
      f.source_node = a;
      f.path = *path_between(t, a, b, t.full_residuals());
      f.rate = Bandwidth::kbps(pct(rng) * 80);
      sim.activate_flow(f);
    }
    for (int step = 0; step < 100; ++step) {
      if (!t.links().empty() && pct(rng) < 30) {
        const LinkIndex l = std::uniform_int_distribution<LinkIndex>(0, t.links().size() - 1)(rng);
        sim.on_link_state_changed({l, t.link(l).id, pct(rng) < 50});
      }
      sim.advance(Millis(1 + pct(rng) * 97));
      for (const auto& f : sim.flows()) {
        ++checks;
        if (!f.conserved())
          return fail(fmt::format("seed {} step {} flow {}: {} != {} + {} + {}", seed, step, f.id, f.bits_sourced,
                                  f.bits_delivered, f.bits_cached, f.bits_lost));
      }
    }
  }
  return pass(fmt::format("{} flow checks over 300 random fault schedules, all exact", checks));
}

Verdict criterion_9() {
  const auto plain = run_named("usecase_c"), restarted = run_named("usecase_c_restart");
  if (restarted.outcome.status != ScenarioOutcome::Status::Passed) return fail(restarted.outcome.message);
  if (plain.outcome.final_report != restarted.outcome.final_report) return fail("usecase_c final report differs after restart");

  // Restart after every step of every shipped scenario.
  int variants = 0;
  for (const char* name : {"usecase_a", "usecase_b", "usecase_c", "usecase_a_fault", "usecase_b_degradation"}) {
    const auto script = ScenarioScript::load(scenario_path(name));
    const auto baseline = run_scenario(script);
    for (std::size_t k = 1; k < script.steps.size(); ++k) {
      auto variant = script;
      variant.steps.insert(variant.steps.begin() + static_cast<std::ptrdiff_t>(k), json("restart"));
      const auto resumed = run_scenario(variant);
      if (resumed.final_report != baseline.final_report || resumed.decisions != baseline.decisions)
        return fail(fmt::format("{} with restart before step {} differs", name, k + 1));
      ++variants;
    }
  }
  return pass(fmt::format("usecase_c identical across restart; {} mid-scenario restarts identical", variants));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"use case A: cloud placement, WAN offered 4.0 Mbit/s", criterion_1},
      {"use case B: edge placement, WAN offered 0.2 Mbit/s", criterion_2},
      {"use case B degradation: admission outcomes", criterion_3},
      {"use case C: cache absorbs the WAN fault", criterion_4},
      {"scheduler oracle equivalence", criterion_5},
      {"inventory conservation", criterion_6},
      {"FCFS determinism", criterion_7},
      {"flowsim byte conservation", criterion_8},
      {"persistence round-trip", criterion_9},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    failures += v.passed ? 0 : 1;
    std::cout << fmt::format("[{}] criterion {}: {} -- {}\n", v.passed ? "PASS" : "FAIL", i + 1, criteria[i].first,
                             v.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
