#include "foglet/scheduler.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace foglet {

namespace {

struct Context {
  const DeploymentRequest& request;
  const InventoryData& view;
  const Topology& topo;
  const SchedulerConfig& config;
  const Residuals& residuals;
};

std::string fmt_bw(Bandwidth b) { return b.is_unbounded() ? "inf" : fmt::format("{}", b.mbps()); }

const Placement* find_placement(const InventoryData& view, const std::string& tenant,
                                const std::string& component) {
  for (const auto& [id, p] : view.placements)
    if (p.tenant == tenant && p.component == component) return &p;
  return nullptr;
}

bool guaranteed_endpoint(const DeploymentRequest& r, const std::string& endpoint) {
  for (const auto* n : r.network())
    if (n->endpoint == endpoint && n->profile != NetworkProfile::BestEffort) return true;
  return false;
}

// Streams that would start once the request lands on `node`: its own
// declared flows toward endpoints and already-placed components, plus
// flows other placements declared toward this component.
std::vector<PlannedFlow> candidate_flows(const Context& c, NodeIndex node) {
  std::vector<PlannedFlow> flows;
  const auto& req = c.request;
  auto add = [&](std::string other, NodeIndex other_node, bool other_is_component,
                 FlowSpec::Direction dir, Bandwidth rate, bool guaranteed, std::string owner,
                 std::string peer_request) {
    PlannedFlow f;
    const bool inbound = dir == FlowSpec::Direction::Inbound;
    f.source = inbound ? other : req.component.name;
    f.sink = inbound ? req.component.name : other;
    f.source_node = inbound ? other_node : node;
    f.sink_node = inbound ? node : other_node;
    f.source_is_component = inbound ? other_is_component : true;
    f.rate = rate;
    f.guaranteed = guaranteed;
    f.owner_request = std::move(owner);
    f.peer_request = std::move(peer_request);
    flows.push_back(std::move(f));
  };

  for (const auto& spec : req.component.flows) {
    if (spec.peer.kind == PeerRef::Kind::Endpoint) {
      const Endpoint* ep = c.topo.find_endpoint(spec.peer.id);
      if (!ep) continue;
      add(ep->id, ep->node, false, spec.direction, spec.rate,
          guaranteed_endpoint(req, ep->id), req.id, "");
    } else if (const Placement* peer = find_placement(c.view, req.tenant, spec.peer.id)) {
      const auto peer_node = c.topo.find_node(peer->node_id);
      if (!peer_node) continue;
      add(peer->component, *peer_node, true, spec.direction, spec.rate, false, req.id,
          peer->request_id);
    }
  }
  for (const auto& [id, p] : c.view.placements) {
    if (p.tenant != req.tenant || p.component == req.component.name) continue;
    const auto peer_node = c.topo.find_node(p.node_id);
    if (!peer_node) continue;
    for (const auto& spec : p.flows) {
      if (spec.peer.kind != PeerRef::Kind::Component || spec.peer.id != req.component.name) continue;
      // The placed component's outbound stream arrives here as inbound.
      const auto dir = spec.direction == FlowSpec::Direction::Outbound ? FlowSpec::Direction::Inbound
                                                                       : FlowSpec::Direction::Outbound;
      add(p.component, *peer_node, true, dir, spec.rate, false, req.id, p.request_id);
    }
  }
  return flows;
}

// Routes every flow and admits it against the residuals: guaranteed flows
// need their full rate on every link, best-effort flows need any headroom
// and take min(rate, headroom).
void admit_flows(const Context& c, std::vector<PlannedFlow>& flows, std::vector<FilterCheck>& checks) {
  Residuals remaining = c.residuals;
  std::vector<std::optional<Path>> paths;
  for (const auto& f : flows) paths.push_back(path_between(c.topo, f.source_node, f.sink_node, c.residuals));

  auto headroom = [&](const Path& p) {
    Bandwidth b = Bandwidth::unbounded();
    const LinkIndex* worst = nullptr;
    for (const LinkIndex& l : p.links) {
      if (*remaining[l] < b) {
        b = *remaining[l];
        worst = &l;
      }
    }
    return std::pair{b, worst};
  };

  for (int pass = 0; pass < 2; ++pass) {
    const bool want_guaranteed = pass == 0;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      auto& f = flows[i];
      if (f.guaranteed != want_guaranteed) continue;
      FilterCheck check{fmt::format("Flow({}->{}, {} Mbit/s{})", f.source, f.sink, f.rate.mbps(),
                                    f.guaranteed ? ", guaranteed" : ""),
                        false, ""};
      if (!paths[i]) {
        check.measured = "unreachable";
        checks.push_back(std::move(check));
        continue;
      }
      f.path = *paths[i];
      const auto [room, worst] = headroom(f.path);
      if (f.rate.kbps() == 0 || f.path.empty()) {
        check.passed = true;
        check.measured = f.path.empty() ? "co-located" : "zero rate";
      } else if (f.guaranteed ? room >= f.rate : room > Bandwidth::kbps(0)) {
        f.reserved = f.guaranteed ? f.rate : std::min(f.rate, room);
        for (LinkIndex l : f.path.links) *remaining[l] -= f.reserved;
        check.passed = true;
        check.measured = fmt::format("reserved {} Mbit/s, headroom {} Mbit/s", f.reserved.mbps(),
                                     fmt_bw(room));
      } else {
        const auto& link = c.topo.link(*worst);
        check.measured = fmt::format(
            "InsufficientResources: bandwidth on {} (residual {} Mbit/s, need {} Mbit/s)", link.id,
            fmt_bw(room), f.guaranteed ? fmt::format("{}", f.rate.mbps()) : std::string("> 0"));
      }
      checks.push_back(std::move(check));
    }
  }
}

FilterVerdict evaluate(const Context& c, NodeIndex n) {
  const Node& node = c.topo.node(n);
  FilterVerdict v;
  v.node = n;
  v.node_id = node.id;

  const ResourceVector demand = effective_demand(c.request, c.config);
  const ResourceVector free = c.view.nodes.at(n).free();
  {
    FilterCheck check{"Compute", demand.fits_within(free), ""};
    check.measured = check.passed
                         ? fmt::format("free {}, need {}", free.to_string(), demand.to_string())
                         : fmt::format("InsufficientResources: free {}, need {}", free.to_string(),
                                       demand.to_string());
    v.checks.push_back(std::move(check));
  }
  if (const auto* loc = c.request.location())
    v.checks.push_back({describe(*loc), node.region == loc->region, "region " + node.region});
  for (const auto* ar : c.request.access_rights())
    v.checks.push_back({describe(*ar), node.labels.contains(ar->label),
                        fmt::format("labels [{}]", fmt::join(node.labels, ", "))});

  for (const auto* net : c.request.network()) {
    FilterCheck check{describe(*net), false, ""};
    const Endpoint* ep = c.topo.find_endpoint(net->endpoint);
    const auto path = ep ? path_between(c.topo, n, ep->node, c.residuals) : std::nullopt;
    if (!path) {
      check.measured = ep ? "unreachable" : "unknown endpoint";
    } else {
      const auto m = path_metrics(c.topo, *path, c.residuals);
      const auto& row = c.config.thresholds[net->profile];
      const bool bw_ok = !row.min_bandwidth || m.bottleneck >= *row.min_bandwidth;
      const bool lat_ok = !row.max_latency_ms || m.total_latency_ms <= *row.max_latency_ms;
      const bool jit_ok = !row.max_jitter_ms || m.total_jitter_ms <= *row.max_jitter_ms;
      check.passed = bw_ok && lat_ok && jit_ok;
      check.measured = fmt::format("bottleneck {} Mbit/s, latency {} ms, jitter {} ms, {} hops",
                                   fmt_bw(m.bottleneck), m.total_latency_ms, m.total_jitter_ms,
                                   m.hops);
      if (!bw_ok) check.measured = "InsufficientResources: " + check.measured;
    }
    v.checks.push_back(std::move(check));
  }

  auto flows = candidate_flows(c, n);
  admit_flows(c, flows, v.checks);

  v.passed = std::all_of(v.checks.begin(), v.checks.end(), [](const auto& ch) { return ch.passed; });
  if (v.passed) v.flows = std::move(flows);
  return v;
}

std::array<double, 3> profile_weights(ComputeProfile p) {
  switch (p) {
    case ComputeProfile::GeneralPurpose: return {1.0 / 3, 1.0 / 3, 1.0 / 3};
    case ComputeProfile::ComputeOptimized: return {0.6, 0.2, 0.2};
    case ComputeProfile::MemoryOptimized: return {0.2, 0.6, 0.2};
    case ComputeProfile::StorageOptimized: return {0.2, 0.2, 0.6};
  }
  return {1.0 / 3, 1.0 / 3, 1.0 / 3};
}

double fraction(std::int64_t left, std::int64_t capacity) {
  if (capacity <= 0) return 0.0;
  return std::clamp(static_cast<double>(left) / static_cast<double>(capacity), 0.0, 1.0);
}

ScoredNode score(const Context& c, NodeIndex n) {
  const Node& node = c.topo.node(n);
  ScoredNode s;
  s.node = n;
  s.node_id = node.id;

  const ResourceVector left = c.view.nodes.at(n).free() - effective_demand(c.request, c.config);
  const auto w = profile_weights(c.request.compute() ? c.request.compute()->profile
                                                     : ComputeProfile::GeneralPurpose);
  s.subscores.capacity_fit = w[0] * fraction(left.millicores, node.capacity.millicores) +
                             w[1] * fraction(left.ram_mib, node.capacity.ram_mib) +
                             w[2] * fraction(left.disk_gib, node.capacity.disk_gib);

  const auto nets = c.request.network();
  if (nets.empty()) {
    s.subscores.network_slack = 1.0;
  } else {
    double sum = 0;
    for (const auto* net : nets) {
      const auto& row = c.config.thresholds[net->profile];
      const Endpoint* ep = c.topo.find_endpoint(net->endpoint);
      const auto path = ep ? path_between(c.topo, n, ep->node, c.residuals) : std::nullopt;
      if (!path) continue;
      if (!row.min_bandwidth || row.min_bandwidth->kbps() == 0) {
        sum += 1.0;
        continue;
      }
      const auto m = path_metrics(c.topo, *path, c.residuals);
      if (m.bottleneck.is_unbounded()) {
        sum += 1.0;
      } else {
        sum += std::min(1.0, static_cast<double>(m.bottleneck.kbps()) /
                                 (2.0 * static_cast<double>(row.min_bandwidth->kbps())));
      }
    }
    s.subscores.network_slack = sum / static_cast<double>(nets.size());
  }

  s.subscores.tier_preference = c.config.tier_preference(node.tier);
  const auto& wt = c.config.weights;
  s.score = wt.capacity_fit * s.subscores.capacity_fit + wt.network_slack * s.subscores.network_slack +
            wt.tier_preference * s.subscores.tier_preference;
  return s;
}

std::vector<NodeIndex> hostable(const Topology& topo) {
  std::vector<NodeIndex> out;
  for (NodeIndex n = 0; n < topo.nodes().size(); ++n)
    if (can_host(topo.node(n).tier)) out.push_back(n);
  return out;
}

}  // namespace

const FilterVerdict* Decision::verdict_for(NodeIndex n) const {
  for (const auto& v : verdicts)
    if (v.node == n) return &v;
  return nullptr;
}

ResourceVector effective_demand(const DeploymentRequest& request, const SchedulerConfig& config) {
  const auto* compute = request.compute();
  if (!compute || compute->request.is_zero()) return config.default_footprint;
  return compute->request;
}

FilterVerdict evaluate_node(const DeploymentRequest& request, NodeIndex node,
                            const InventoryData& view, const Topology& topo,
                            const SchedulerConfig& config) {
  const Residuals residuals = view.residuals();
  return evaluate({request, view, topo, config, residuals}, node);
}

std::vector<FilterVerdict> feasible_nodes(const DeploymentRequest& request,
                                          const InventoryData& view, const Topology& topo,
                                          const SchedulerConfig& config) {
  const Residuals residuals = view.residuals();
  const Context c{request, view, topo, config, residuals};
  std::vector<FilterVerdict> out;
  for (NodeIndex n : hostable(topo)) out.push_back(evaluate(c, n));
  return out;
}

ScoredNode priority(NodeIndex node, const DeploymentRequest& request, const InventoryData& view,
                    const Topology& topo, const SchedulerConfig& config) {
  const Residuals residuals = view.residuals();
  return score({request, view, topo, config, residuals}, node);
}

NodeIndex choose(const std::vector<ScoredNode>& scored) {
  const ScoredNode* best = &scored.front();
  for (const auto& s : scored)
    if (s.score > best->score || (s.score == best->score && s.node_id < best->node_id)) best = &s;
  return best->node;
}

Decision decide_serial(const DeploymentRequest& request, const InventoryData& view,
                       const Topology& topo, const SchedulerConfig& config) {
  const Residuals residuals = view.residuals();
  const Context c{request, view, topo, config, residuals};
  Decision d;
  for (NodeIndex n : hostable(topo)) {
    d.verdicts.push_back(evaluate(c, n));
    if (d.verdicts.back().passed) d.scored.push_back(score(c, n));
  }
  if (!d.scored.empty()) d.chosen = choose(d.scored);
  return d;
}

Decision decide_parallel(const DeploymentRequest& request, const InventoryData& view,
                         const Topology& topo, const SchedulerConfig& config) {
  const Residuals residuals = view.residuals();
  const Context c{request, view, topo, config, residuals};
  const auto nodes = hostable(topo);
  const auto count = static_cast<std::ptrdiff_t>(nodes.size());
  std::vector<FilterVerdict> verdicts(nodes.size());
  std::vector<std::optional<ScoredNode>> scores(nodes.size());

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    verdicts[i] = evaluate(c, nodes[i]);
    if (verdicts[i].passed) scores[i] = score(c, nodes[i]);
  }

  Decision d;
  d.verdicts = std::move(verdicts);
  for (auto& s : scores)
    if (s) d.scored.push_back(std::move(*s));
  if (!d.scored.empty()) d.chosen = choose(d.scored);
  return d;
}

Decision decide(const DeploymentRequest& request, const InventoryData& view, const Topology& topo,
                const SchedulerConfig& config) {
  return config.parallel ? decide_parallel(request, view, topo, config)
                         : decide_serial(request, view, topo, config);
}

std::vector<NetworkReservation> network_reservations(const Topology& topo,
                                                     const std::vector<PlannedFlow>& flows) {
  std::vector<NetworkReservation> out;
  for (const auto& f : flows)
    if (!f.path.empty() && f.reserved.kbps() > 0) out.push_back({link_ids(topo, f.path), f.reserved});
  return out;
}

json to_json(const Decision& d, const Topology& topo) {
  json verdicts = json::array();
  for (const auto& v : d.verdicts) {
    json checks = json::array();
    for (const auto& ch : v.checks)
      checks.push_back({{"requirement", ch.requirement}, {"passed", ch.passed}, {"measured", ch.measured}});
    verdicts.push_back({{"node", v.node_id}, {"passed", v.passed}, {"checks", checks}});
  }
  json scored = json::array();
  for (const auto& s : d.scored)
    scored.push_back({{"node", s.node_id},
                      {"score", s.score},
                      {"capacity_fit", s.subscores.capacity_fit},
                      {"network_slack", s.subscores.network_slack},
                      {"tier_preference", s.subscores.tier_preference}});
  return {{"verdicts", verdicts},
          {"scores", scored},
          {"chosen", d.chosen ? json(topo.node(*d.chosen).id) : json(nullptr)}};
}

}  // namespace foglet
