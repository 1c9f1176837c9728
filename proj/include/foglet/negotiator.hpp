#pragma once

#include <string>
#include <variant>
#include <vector>

#include "foglet/config.hpp"
#include "foglet/inventory.hpp"
#include "foglet/scheduler.hpp"

namespace foglet {

// Why one node could not host the request. `requirement` names the first
// failed check; `detail` lists every failed check on that node.
struct RejectReason {
  std::string node_id;
  std::string requirement;
  std::string detail;
  bool operator==(const RejectReason&) const = default;
};

struct Accepted {
  std::string reservation_id;
  std::string candidate_node;
  std::vector<PlannedFlow> flows;
};

struct Rejected {
  std::vector<RejectReason> reasons;
};

using NegotiationOutcome = std::variant<Accepted, Rejected>;

struct Negotiation {
  NegotiationOutcome outcome;
  Decision decision;  // filter and rank trace behind the outcome
};

// Filters and ranks over a fresh snapshot, then holds a reservation on the
// chosen node. A rejection leaves the inventory untouched.
Negotiation negotiate(const DeploymentRequest& request, Inventory& inventory, const Topology& topo,
                      const SchedulerConfig& config, Millis now,
                      std::optional<Millis> ttl = std::nullopt);

std::vector<RejectReason> reject_reasons(const Decision& decision);

json to_json(const RejectReason& r);
json to_json(const NegotiationOutcome& o);

}  // namespace foglet
