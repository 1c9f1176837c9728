#include "foglet/topology.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include <fmt/format.h>

namespace foglet {

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw TopologyError(TopologyError::Kind::Malformed, where + ": missing " + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw TopologyError(TopologyError::Kind::Malformed, where + ": bad value for " + key);
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key, where);
}

std::vector<std::size_t> bfs(const Topology& topo, NodeIndex from,
                             std::span<const std::optional<Bandwidth>> residual) {
  std::vector<std::size_t> dist(topo.nodes().size(), kUnreached);
  std::deque<NodeIndex> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    const NodeIndex u = queue.front();
    queue.pop_front();
    for (const auto& [v, l] : topo.incident(u)) {
      if (!residual[l] || dist[v] != kUnreached) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

Path canonical_path(const Topology& topo, NodeIndex src, NodeIndex dst,
                    std::span<const std::optional<Bandwidth>> residual, bool& found) {
  found = false;
  const auto from_src = bfs(topo, src, residual);
  if (from_src[dst] == kUnreached) return {};
  found = true;
  const auto to_dst = bfs(topo, dst, residual);
  const std::size_t hops = from_src[dst];

  auto on_shortest = [&](NodeIndex u, NodeIndex v, LinkIndex l) {
    return residual[l] && from_src[u] != kUnreached && from_src[u] + 1 == from_src[v] &&
           to_dst[v] != kUnreached && from_src[v] + to_dst[v] == hops;
  };

  // Best achievable bottleneck from each node to dst along shortest paths.
  std::vector<NodeIndex> order;
  for (NodeIndex n = 0; n < topo.nodes().size(); ++n)
    if (from_src[n] != kUnreached && to_dst[n] != kUnreached && from_src[n] + to_dst[n] == hops)
      order.push_back(n);
  std::sort(order.begin(), order.end(),
            [&](NodeIndex x, NodeIndex y) { return from_src[x] > from_src[y]; });
  std::vector<Bandwidth> best(topo.nodes().size(), Bandwidth::kbps(-1));
  best[dst] = Bandwidth::unbounded();
  for (NodeIndex u : order) {
    if (u == dst) continue;
    for (const auto& [v, l] : topo.incident(u)) {
      if (!on_shortest(u, v, l)) continue;
      best[u] = std::max(best[u], std::min(*residual[l], best[v]));
    }
  }

  const Bandwidth target = best[src];
  Path p;
  p.nodes.push_back(src);
  NodeIndex u = src;
  while (u != dst) {
    const std::string* chosen_id = nullptr;
    LinkIndex chosen = 0;
    for (const auto& [v, l] : topo.incident(u)) {
      if (!on_shortest(u, v, l) || std::min(*residual[l], best[v]) < target) continue;
      if (!chosen_id || topo.link(l).id < *chosen_id) {
        chosen_id = &topo.link(l).id;
        chosen = l;
      }
    }
    p.links.push_back(chosen);
    u = topo.link(chosen).other(u);
    p.nodes.push_back(u);
  }
  return p;
}

}  // namespace

Path Path::reversed() const {
  Path r;
  r.links.assign(links.rbegin(), links.rend());
  r.nodes.assign(nodes.rbegin(), nodes.rend());
  return r;
}

Topology Topology::load(const json& doc) {
  using K = TopologyError::Kind;
  if (!doc.is_object()) throw TopologyError(K::Malformed, "topology document must be an object");
  Topology t;

  for (const auto& n : doc.value("nodes", json::array())) {
    Node node;
    node.id = field<std::string>(n, "id", "node");
    const std::string where = "node " + node.id;
    const auto tier = parse_tier(field<std::string>(n, "tier", where));
    if (!tier) throw TopologyError(K::Malformed, where + ": unknown tier");
    node.tier = *tier;
    node.region = field_or<std::string>(n, "region", "", where);
    node.capacity = ResourceVector::of(field_or<double>(n, "vcpus", 0.0, where),
                                       field_or<std::int64_t>(n, "ram_mib", 0, where),
                                       field_or<std::int64_t>(n, "disk_gib", 0, where));
    if (!node.capacity.is_non_negative()) throw TopologyError(K::Malformed, where + ": negative capacity");
    node.cache_mib = field_or<std::int64_t>(n, "cache_mib", 0, where);
    if (node.cache_mib < 0) throw TopologyError(K::Malformed, where + ": negative cache");
    for (const auto& l : n.value("labels", json::array())) node.labels.insert(l.get<std::string>());
    if (node.tier == Tier::SwarmOfThings && !node.capacity.is_zero())
      throw TopologyError(K::SwarmCapacity, where + ": SwarmOfThings nodes cannot have capacity");
    if (!t.node_index_.emplace(node.id, t.nodes_.size()).second)
      throw TopologyError(K::Duplicate, "duplicate node id " + node.id);
    t.nodes_.push_back(std::move(node));
  }
  t.adjacency_.resize(t.nodes_.size());

  for (const auto& l : doc.value("links", json::array())) {
    Link link;
    link.id = field<std::string>(l, "id", "link");
    const std::string where = "link " + link.id;
    for (auto [key, slot] : {std::pair{"a", &link.a}, std::pair{"b", &link.b}}) {
      const auto end = field<std::string>(l, key, where);
      const auto it = t.node_index_.find(end);
      if (it == t.node_index_.end())
        throw TopologyError(K::Dangling, where + ": dangling endpoint " + end);
      *slot = it->second;
    }
    if (link.a == link.b) throw TopologyError(K::Malformed, where + ": self loop");
    const double bw = field<double>(l, "bandwidth_mbps", where);
    link.latency_ms = field_or<double>(l, "latency_ms", 0.0, where);
    link.jitter_ms = field_or<double>(l, "jitter_ms", 0.0, where);
    if (!(bw > 0) || link.latency_ms < 0 || link.jitter_ms < 0)
      throw TopologyError(K::Malformed, where + ": bandwidth must be > 0, latency/jitter >= 0");
    link.bandwidth = Bandwidth::mbps(bw);
    if (link.bandwidth.kbps() <= 0) throw TopologyError(K::Malformed, where + ": bandwidth below 1 kbit/s");
    link.up = field_or<std::string>(l, "state", "Up", where) != "Down";
    if (!t.link_index_.emplace(link.id, t.links_.size()).second)
      throw TopologyError(K::Duplicate, "duplicate link id " + link.id);
    t.adjacency_[link.a].emplace_back(link.b, t.links_.size());
    t.adjacency_[link.b].emplace_back(link.a, t.links_.size());
    t.links_.push_back(std::move(link));
  }

  for (const auto& e : doc.value("endpoints", json::array())) {
    Endpoint ep;
    ep.id = field<std::string>(e, "id", "endpoint");
    const auto node = field<std::string>(e, "node", "endpoint " + ep.id);
    const auto it = t.node_index_.find(node);
    if (it == t.node_index_.end())
      throw TopologyError(K::Dangling, "endpoint " + ep.id + ": dangling node " + node);
    ep.node = it->second;
    ep.kind = field_or<std::string>(e, "kind", "", "endpoint " + ep.id);
    if (!t.endpoint_index_.emplace(ep.id, t.endpoints_.size()).second)
      throw TopologyError(K::Duplicate, "duplicate endpoint id " + ep.id);
    t.endpoints_.push_back(std::move(ep));
  }

  // Connectivity is judged with every link considered Up.
  if (!t.nodes_.empty()) {
    Residuals all(t.links_.size(), Bandwidth::kbps(1));
    const auto dist = bfs(t, 0, all);
    for (NodeIndex n = 0; n < t.nodes_.size(); ++n)
      if (dist[n] == kUnreached)
        throw TopologyError(K::Disconnected, "node " + t.nodes_[n].id + " is not connected");
  }
  return t;
}

json Topology::to_json() const {
  json nodes = json::array(), links = json::array(), endpoints = json::array();
  for (const auto& n : nodes_)
    nodes.push_back({{"id", n.id},
                     {"tier", foglet::to_string(n.tier)},
                     {"region", n.region},
                     {"vcpus", n.capacity.vcpus()},
                     {"ram_mib", n.capacity.ram_mib},
                     {"disk_gib", n.capacity.disk_gib},
                     {"cache_mib", n.cache_mib},
                     {"labels", n.labels}});
  for (const auto& l : links_)
    links.push_back({{"id", l.id},
                     {"a", nodes_[l.a].id},
                     {"b", nodes_[l.b].id},
                     {"bandwidth_mbps", l.bandwidth.mbps()},
                     {"latency_ms", l.latency_ms},
                     {"jitter_ms", l.jitter_ms},
                     {"state", l.up ? "Up" : "Down"}});
  for (const auto& e : endpoints_)
    endpoints.push_back({{"id", e.id}, {"node", nodes_[e.node].id}, {"kind", e.kind}});
  return {{"nodes", nodes}, {"links", links}, {"endpoints", endpoints}};
}

std::optional<NodeIndex> Topology::find_node(const std::string& id) const {
  const auto it = node_index_.find(id);
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<LinkIndex> Topology::find_link(const std::string& id) const {
  const auto it = link_index_.find(id);
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

const Endpoint* Topology::find_endpoint(const std::string& id) const {
  const auto it = endpoint_index_.find(id);
  return it == endpoint_index_.end() ? nullptr : &endpoints_[it->second];
}

KnownReferences Topology::known_references() const {
  KnownReferences refs;
  for (const auto& e : endpoints_) refs.endpoints.insert(e.id);
  for (const auto& n : nodes_)
    if (!n.region.empty()) refs.regions.insert(n.region);
  return refs;
}

Residuals Topology::full_residuals() const {
  Residuals r(links_.size());
  for (LinkIndex l = 0; l < links_.size(); ++l)
    if (links_[l].up) r[l] = links_[l].bandwidth;
  return r;
}

std::optional<LinkStateChanged> Topology::set_link_state(const std::string& link_id, bool up) {
  const auto idx = find_link(link_id);
  if (!idx) throw TopologyError(TopologyError::Kind::UnknownId, "unknown link " + link_id);
  auto& link = links_[*idx];
  if (link.up == up) return std::nullopt;
  link.up = up;
  return LinkStateChanged{*idx, link.id, up};
}

std::optional<Path> path_between(const Topology& topo, NodeIndex a, NodeIndex b,
                                 std::span<const std::optional<Bandwidth>> residual) {
  if (a == b) return Path{{}, {a}};
  const bool flip = topo.node(b).id < topo.node(a).id;
  bool found = false;
  Path p = flip ? canonical_path(topo, b, a, residual, found)
                : canonical_path(topo, a, b, residual, found);
  if (!found) return std::nullopt;
  return flip ? p.reversed() : p;
}

PathMetrics path_metrics(const Topology& topo, const Path& p,
                         std::span<const std::optional<Bandwidth>> residual) {
  PathMetrics m;
  for (LinkIndex l : p.links) {
    const auto& link = topo.link(l);
    m.bottleneck = std::min(m.bottleneck, residual[l].value_or(Bandwidth::kbps(0)));
    m.total_latency_ms += link.latency_ms;
    m.total_jitter_ms += link.jitter_ms;
    ++m.hops;
  }
  return m;
}

std::vector<std::string> link_ids(const Topology& topo, const Path& p) {
  std::vector<std::string> ids;
  ids.reserve(p.links.size());
  for (LinkIndex l : p.links) ids.push_back(topo.link(l).id);
  return ids;
}

}  // namespace foglet
