#pragma once

#include <optional>
#include <string>
#include <vector>

#include "foglet/config.hpp"
#include "foglet/inventory.hpp"
#include "foglet/topology.hpp"

namespace foglet {

// A stream the placement would carry, routed for one candidate node.
struct PlannedFlow {
  std::string source;       // endpoint id or component name
  std::string sink;
  std::string owner_request;  // request whose placement reserves the flow
  std::string peer_request;   // placed peer component, empty for endpoints
  NodeIndex source_node = 0;
  NodeIndex sink_node = 0;
  bool source_is_component = false;
  Path path;                // oriented source -> sink
  Bandwidth rate;
  Bandwidth reserved;
  bool guaranteed = false;
};

struct FilterCheck {
  std::string requirement;
  bool passed = false;
  std::string measured;
};

struct FilterVerdict {
  std::string node_id;
  NodeIndex node = 0;
  bool passed = false;
  std::vector<FilterCheck> checks;
  // Only set for nodes that passed.
  std::vector<PlannedFlow> flows;
};

struct ScoreBreakdown {
  double capacity_fit = 0;
  double network_slack = 0;
  double tier_preference = 0;
};

struct ScoredNode {
  std::string node_id;
  NodeIndex node = 0;
  double score = 0;
  ScoreBreakdown subscores;
};

// Filter, rank and choice for one request over one inventory view.
struct Decision {
  std::vector<FilterVerdict> verdicts;
  std::vector<ScoredNode> scored;
  std::optional<NodeIndex> chosen;

  const FilterVerdict* verdict_for(NodeIndex n) const;
};

// Compute demand reserved for the request: its Compute quantities, or the
// configured default footprint when there is none (or it is all zero).
ResourceVector effective_demand(const DeploymentRequest& request, const SchedulerConfig& config);

// One verdict per hostable node, in topology order. Pure over the view.
std::vector<FilterVerdict> feasible_nodes(const DeploymentRequest& request,
                                          const InventoryData& view, const Topology& topo,
                                          const SchedulerConfig& config);

FilterVerdict evaluate_node(const DeploymentRequest& request, NodeIndex node,
                            const InventoryData& view, const Topology& topo,
                            const SchedulerConfig& config);

ScoredNode priority(NodeIndex node, const DeploymentRequest& request, const InventoryData& view,
                    const Topology& topo, const SchedulerConfig& config);

// Highest score, ties to the lexicographically smallest node id.
// Precondition: !scored.empty().
NodeIndex choose(const std::vector<ScoredNode>& scored);

// Runs filter -> rank -> choose. Uses the OpenMP path when config.parallel.
Decision decide(const DeploymentRequest& request, const InventoryData& view, const Topology& topo,
                const SchedulerConfig& config);
Decision decide_serial(const DeploymentRequest& request, const InventoryData& view,
                       const Topology& topo, const SchedulerConfig& config);
Decision decide_parallel(const DeploymentRequest& request, const InventoryData& view,
                         const Topology& topo, const SchedulerConfig& config);

std::vector<NetworkReservation> network_reservations(const Topology& topo,
                                                     const std::vector<PlannedFlow>& flows);

json to_json(const Decision& d, const Topology& topo);

}  // namespace foglet
