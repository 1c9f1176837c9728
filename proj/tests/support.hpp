#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>
#include <tuple>
#include <random>
#include <string>

#include "foglet/documents.hpp"
#include "foglet/topology.hpp"

namespace foglet::test {

inline std::filesystem::path source_dir() { return FOGLET_SOURCE_DIR; }

inline json reference_topology_doc() {
  return load_document(source_dir() / "topologies" / "reference.yaml");
}

inline json request_doc(const std::string& name) {
  return load_document(source_dir() / "requests" / (name + ".yaml"));
}

inline json node_doc(const std::string& id, const std::string& tier, double vcpus, std::int64_t ram,
                     std::int64_t disk, const std::string& region = "r") {
  return {{"id", id}, {"tier", tier}, {"region", region}, {"vcpus", vcpus}, {"ram_mib", ram}, {"disk_gib", disk}};
}

inline json link_doc(const std::string& id, const std::string& a, const std::string& b, double mbps,
                     double latency = 1, double jitter = 0) {
  return {{"id", id}, {"a", a}, {"b", b}, {"bandwidth_mbps", mbps}, {"latency_ms", latency}, {"jitter_ms", jitter}};
}

// Connected random graph: a random spanning tree plus `extra` chords.
inline json random_topology_doc(std::mt19937_64& rng, int nodes, int extra_links, bool with_swarm = false) {
  static const char* kTiers[] = {"Cloud", "EdgeCloudlet", "EdgeGateway"};
  std::uniform_int_distribution<int> tier(0, 2), vcpu(1, 16), ram(1, 32), disk(1, 50), bw(1, 100),
      lat(0, 50), region(0, 2);
  json doc = {{"nodes", json::array()}, {"links", json::array()}, {"endpoints", json::array()}};
  for (int i = 0; i < nodes; ++i) {
    const bool swarm = with_swarm && i == nodes - 1 && nodes > 1;
    json n = node_doc("n" + std::to_string(i), swarm ? "SwarmOfThings" : kTiers[tier(rng)],
                      swarm ? 0 : vcpu(rng), swarm ? 0 : ram(rng) * 512, swarm ? 0 : disk(rng) * 10,
                      "region-" + std::to_string(region(rng)));
    if (!swarm && i % 2 == 0) n["labels"] = {"trusted"};
    doc["nodes"].push_back(n);
  }
  int link_id = 0;
  for (int i = 1; i < nodes; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    doc["links"].push_back(link_doc("l" + std::to_string(link_id++), "n" + std::to_string(parent(rng)),
                                    "n" + std::to_string(i), bw(rng), lat(rng), lat(rng) / 10.0));
  }
  std::uniform_int_distribution<int> pick(0, nodes - 1);
  for (int k = 0; k < extra_links && nodes > 1; ++k) {
    const int a = pick(rng);
    int b = pick(rng);
    if (a == b) b = (b + 1) % nodes;
    doc["links"].push_back(link_doc("l" + std::to_string(link_id++), "n" + std::to_string(a),
                                    "n" + std::to_string(b), bw(rng), lat(rng), lat(rng) / 10.0));
  }
  for (int e = 0; e < 2; ++e)
    doc["endpoints"].push_back({{"id", "ep" + std::to_string(e)}, {"node", "n" + std::to_string(pick(rng))}, {"kind", "sensor"}});
  return doc;
}

// Every simple path from a to b over usable links, then the documented order:
// fewest hops, widest bottleneck, smallest link-id sequence read from the
// endpoint with the smaller node id.
inline std::optional<std::vector<LinkIndex>> oracle_path(const Topology& t, NodeIndex a, NodeIndex b, const Residuals& res) {
  if (a == b) return std::vector<LinkIndex>{};
  std::vector<std::vector<LinkIndex>> all;
  std::vector<bool> seen(t.nodes().size(), false);
  std::vector<LinkIndex> cur;
  std::function<void(NodeIndex)> dfs = [&](NodeIndex n) {
    if (n == b) {
      all.push_back(cur);
      return;
    }
    seen[n] = true;
    for (LinkIndex l = 0; l < t.links().size(); ++l) {
      const Link& link = t.link(l);
      if (!res[l] || (link.a != n && link.b != n)) continue;
      const NodeIndex next = link.other(n);
      if (seen[next]) continue;
      cur.push_back(l);
      dfs(next);
      cur.pop_back();
    }
    seen[n] = false;
  };
  dfs(a);
  if (all.empty()) return std::nullopt;

  const bool flip = t.node(b).id < t.node(a).id;
  auto key = [&](const std::vector<LinkIndex>& p) {
    Bandwidth bottleneck = Bandwidth::unbounded();
    for (auto l : p) bottleneck = std::min(bottleneck, *res[l]);
    std::vector<std::string> ids;
    for (auto l : p) ids.push_back(t.link(l).id);
    if (flip) std::reverse(ids.begin(), ids.end());
    return std::tuple(p.size(), -bottleneck.kbps(), ids);
  };
  return *std::min_element(all.begin(), all.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); });
}

}  // namespace foglet::test
