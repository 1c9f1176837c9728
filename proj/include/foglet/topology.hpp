#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "foglet/model.hpp"

namespace foglet {

using NodeIndex = std::size_t;
using LinkIndex = std::size_t;

struct Node {
  std::string id;
  Tier tier = Tier::Cloud;
  ResourceVector capacity;
  std::string region;
  std::set<std::string> labels;
  // Buffer space available to components hosted here while their outbound
  // paths are down. Zero disables caching on the node.
  std::int64_t cache_mib = 0;
};

struct Link {
  std::string id;
  NodeIndex a = 0;
  NodeIndex b = 0;
  Bandwidth bandwidth;
  double latency_ms = 0;
  double jitter_ms = 0;
  bool up = true;

  NodeIndex other(NodeIndex n) const { return n == a ? b : a; }
};

struct Endpoint {
  std::string id;
  NodeIndex node = 0;
  std::string kind;
};

// Links in travel order plus the visited nodes (nodes.size() == links.size() + 1).
struct Path {
  std::vector<LinkIndex> links;
  std::vector<NodeIndex> nodes;

  bool empty() const { return links.empty(); }
  Path reversed() const;
  bool operator==(const Path&) const = default;
};

struct PathMetrics {
  Bandwidth bottleneck = Bandwidth::unbounded();
  double total_latency_ms = 0;
  double total_jitter_ms = 0;
  std::size_t hops = 0;
  bool operator==(const PathMetrics&) const = default;
};

struct LinkStateChanged {
  LinkIndex link = 0;
  std::string link_id;
  bool up = true;
};

struct TopologyError : std::runtime_error {
  enum class Kind { Malformed, Dangling, Duplicate, Disconnected, SwarmCapacity, UnknownId };
  TopologyError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  Kind kind;
};

// Unreserved bandwidth per link; nullopt marks a link that cannot be used
// (down, or excluded by the caller).
using Residuals = std::vector<std::optional<Bandwidth>>;

class Topology {
 public:
  // Builds and validates a graph from the topology document
  // {nodes: [...], links: [...], endpoints: [...]}.
  static Topology load(const json& doc);
  json to_json() const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Endpoint>& endpoints() const { return endpoints_; }
  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  const Link& link(LinkIndex i) const { return links_.at(i); }

  std::optional<NodeIndex> find_node(const std::string& id) const;
  std::optional<LinkIndex> find_link(const std::string& id) const;
  const Endpoint* find_endpoint(const std::string& id) const;

  // (neighbor, link) pairs for every link touching `n`, regardless of state.
  const std::vector<std::pair<NodeIndex, LinkIndex>>& incident(NodeIndex n) const {
    return adjacency_.at(n);
  }

  KnownReferences known_references() const;

  // Full capacity on every Up link.
  Residuals full_residuals() const;

  // Returns the change event, or nullopt if the link already had that state.
  // Throws TopologyError(UnknownId) for an unknown link.
  std::optional<LinkStateChanged> set_link_state(const std::string& link_id, bool up);

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Endpoint> endpoints_;
  std::unordered_map<std::string, NodeIndex> node_index_;
  std::unordered_map<std::string, LinkIndex> link_index_;
  std::unordered_map<std::string, std::size_t> endpoint_index_;
  std::vector<std::vector<std::pair<NodeIndex, LinkIndex>>> adjacency_;
};

// Minimum-hop path over usable links. Among equal-hop paths the one with the
// largest bottleneck residual wins, then the lexicographically smallest
// link-id sequence read from the node with the smaller id. The selection is
// therefore symmetric: path_between(b, a) == path_between(a, b).reversed().
// nullopt when no usable path exists; a == b yields an empty path.
std::optional<Path> path_between(const Topology& topo, NodeIndex a, NodeIndex b,
                                 std::span<const std::optional<Bandwidth>> residual);

PathMetrics path_metrics(const Topology& topo, const Path& p,
                         std::span<const std::optional<Bandwidth>> residual);

std::vector<std::string> link_ids(const Topology& topo, const Path& p);

}  // namespace foglet
