#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "foglet/scheduler.hpp"
#include "scheduler_oracle.hpp"

using namespace foglet;
using foglet::test::link_doc;
using foglet::test::node_doc;
using foglet::test::random_inventory;
using foglet::test::random_request_doc;

namespace {

Topology reference() { return Topology::load(test::reference_topology_doc()); }

DeploymentRequest request(const json& doc) { return validate_request(doc); }

const FilterVerdict& verdict(const Decision& d, const std::string& node) {
  for (const auto& v : d.verdicts)
    if (v.node_id == node) return v;
  throw std::out_of_range(node);
}

}  // namespace

TEST(Priority, FullGatewayNoNetworkScoresPoint39) {
  const auto t = Topology::load({{"nodes", {node_doc("gw", "EdgeGateway", 1, 512, 1)}}, {"links", json::array()}});
  Inventory inv(t);
  const auto r = request({{"component", "c"}, {"requirements", {{{"compute", {{"vcpus", 1}, {"ram_mib", 512}, {"disk_gib", 1}}}}}}});
  const auto s = priority(0, r, *inv.snapshot(), t, SchedulerConfig{});
  EXPECT_DOUBLE_EQ(s.subscores.capacity_fit, 0.0);
  EXPECT_DOUBLE_EQ(s.subscores.network_slack, 1.0);
  EXPECT_NEAR(s.score, 0.39, 1e-12);
}

TEST(Priority, IdenticalNodesTieAndBreakByName) {
  const auto t = Topology::load({{"nodes", {node_doc("b", "Cloud", 4, 4096, 10), node_doc("a", "Cloud", 4, 4096, 10)}},
                                 {"links", {link_doc("ab", "a", "b", 10)}}});
  Inventory inv(t);
  const auto d = decide_serial(request({{"component", "c"}, {"requirements", json::array()}}), *inv.snapshot(), t, {});
  ASSERT_EQ(d.scored.size(), 2u);
  EXPECT_EQ(d.scored[0].score, d.scored[1].score);
  EXPECT_EQ(t.node(*d.chosen).id, "a");
}

TEST(Choose, Examples) {
  EXPECT_EQ(choose({{"a", 0, 0.5, {}}, {"b", 1, 0.7, {}}}), 1u);
  EXPECT_EQ(choose({{"a", 0, 0.5, {}}, {"b", 1, 0.5, {}}}), 0u);
  EXPECT_EQ(choose({{"b", 1, 0.5, {}}, {"a", 0, 0.5, {}}}), 0u);
  EXPECT_EQ(choose({{"z", 4, 0.1, {}}}), 4u);
}

TEST(Decide, DefaultRequestGoesToCloud) {
  const auto t = reference();
  Inventory inv(t);
  const auto d = decide(request(test::request_doc("face_detection")), *inv.snapshot(), t, {});
  ASSERT_TRUE(d.chosen);
  EXPECT_EQ(t.node(*d.chosen).id, "cloud");
  EXPECT_EQ(verdict(d, "cloud").passed, true);
}

TEST(Decide, LocationRequirementKeepsOnlyRegionA) {
  const auto t = reference();
  Inventory inv(t);
  const auto d = decide(request(test::request_doc("anonymizer")), *inv.snapshot(), t, {});
  EXPECT_TRUE(verdict(d, "cloudlet").passed);
  EXPECT_FALSE(verdict(d, "cloud").passed);
  EXPECT_FALSE(verdict(d, "gateway").passed);
  EXPECT_EQ(t.node(*d.chosen).id, "cloudlet");
}

TEST(Decide, EmptyRequirementsPassEveryNodeWithRoom) {
  const auto t = reference();
  Inventory inv(t);
  const auto r = request({{"component", "c"}, {"requirements", json::array()}});
  for (const auto& v : feasible_nodes(r, *inv.snapshot(), t, {})) EXPECT_TRUE(v.passed) << v.node_id;
  // Fill the gateway's RAM: it drops out.
  ASSERT_TRUE(std::holds_alternative<Reservation>(inv.hold("x", "gateway", ResourceVector::of(0, 1024, 0), {}, Millis(0))));
  EXPECT_FALSE(verdict(decide(r, *inv.snapshot(), t, {}), "gateway").passed);
}

TEST(Decide, BestEffortToUnreachableEndpointFails) {
  const auto t = reference();
  Inventory inv(t);
  for (const auto& l : t.links()) inv.set_link_up(l.id, false);
  const auto r = request({{"component", "c"}, {"requirements", {{{"network", {{"endpoint", "camera-1"}}}}}}});
  const auto d = decide(r, *inv.snapshot(), t, {});
  for (const char* n : {"cloud", "gateway"}) {
    const auto& v = verdict(d, n);
    EXPECT_FALSE(v.passed);
    EXPECT_EQ(v.checks.back().measured, "unreachable");
  }
}

TEST(Decide, SwarmNodesGetNoVerdict) {
  std::mt19937_64 rng(1);
  const auto t = Topology::load(test::random_topology_doc(rng, 5, 1, true));
  Inventory inv(t);
  const auto d = decide(request({{"component", "c"}, {"requirements", json::array()}}), *inv.snapshot(), t, {});
  EXPECT_EQ(d.verdicts.size(), 4u);
}

TEST(Decide, PassedIsConjunctionOfChecks) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    const auto t = Topology::load(test::random_topology_doc(rng, 2 + i % 7, i % 4));
    const auto inv = random_inventory(t, rng);
    for (const auto& v : decide(request(random_request_doc(rng)), *inv->snapshot(), t, {}).verdicts) {
      const bool all = std::all_of(v.checks.begin(), v.checks.end(), [](const auto& c) { return c.passed; });
      ASSERT_EQ(v.passed, all);
    }
  }
}

TEST(DecideProperty, MatchesIndependentOracle) {
  test::OracleStats stats;
  const auto problem = test::oracle_disagreement(1500, 77, &stats);
  ASSERT_FALSE(problem) << *problem;
  // The generator must exercise both outcomes.
  EXPECT_GT(stats.passed_nodes, 500);
  EXPECT_GT(stats.failed_nodes, 500);
  EXPECT_GT(stats.with_choice, 300);
}

TEST(DecideProperty, SerialEqualsParallel) {
  std::mt19937_64 rng(5150);
  for (int i = 0; i < 300; ++i) {
    const auto t = Topology::load(test::random_topology_doc(rng, 2 + i % 60, i % 20));
    const auto inv = random_inventory(t, rng);
    const auto r = request(random_request_doc(rng));
    const auto serial = decide_serial(r, *inv->snapshot(), t, {});
    const auto parallel = decide_parallel(r, *inv->snapshot(), t, {});
    ASSERT_EQ(to_json(serial, t), to_json(parallel, t)) << "instance " << i;
  }
}

// Whatever the filter admits, the inventory accepts as a hold.
TEST(DecideProperty, FilterIsSound) {
  std::mt19937_64 rng(404);
  int holds = 0;
  for (int i = 0; i < 400; ++i) {
    const auto t = Topology::load(test::random_topology_doc(rng, 2 + i % 7, i % 4));
    const auto inv = random_inventory(t, rng);
    const auto r = request(random_request_doc(rng));
    const auto view = inv->snapshot();
    for (const auto& v : decide(r, *view, t, {}).verdicts) {
      if (!v.passed) continue;
      Inventory copy(*view);
      const auto res = copy.hold("probe", v.node_id, effective_demand(r, {}), network_reservations(t, v.flows), Millis(0));
      ASSERT_TRUE(std::holds_alternative<Reservation>(res))
          << std::get<InsufficientResources>(res).to_string() << " on " << v.node_id;
      ++holds;
    }
  }
  EXPECT_GT(holds, 200);
}

TEST(DecideProperty, ScoresInUnitIntervalAndFitMonotone) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> pct(1, 40);
  for (int i = 0; i < 400; ++i) {
    const auto t = Topology::load(test::random_topology_doc(rng, 2 + i % 7, i % 4));
    Inventory inv(t);
    const auto r = request(random_request_doc(rng));
    for (NodeIndex n = 0; n < t.nodes().size(); ++n) {
      if (!can_host(t.node(n).tier)) continue;
      const auto before = priority(n, r, *inv.snapshot(), t, {});
      for (double s : {before.score, before.subscores.capacity_fit, before.subscores.network_slack, before.subscores.tier_preference}) {
        ASSERT_GE(s, 0.0);
        ASSERT_LE(s, 1.0);
      }
      const auto& cap = t.node(n).capacity;
      inv.hold("more", t.node(n).id, {cap.millicores * pct(rng) / 100, cap.ram_mib * pct(rng) / 100, cap.disk_gib * pct(rng) / 100},
               {}, Millis(0));
      ASSERT_LE(priority(n, r, *inv.snapshot(), t, {}).subscores.capacity_fit, before.subscores.capacity_fit);
    }
  }
}
