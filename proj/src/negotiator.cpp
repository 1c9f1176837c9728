#include "foglet/negotiator.hpp"

#include <fmt/format.h>

namespace foglet {

std::vector<RejectReason> reject_reasons(const Decision& decision) {
  std::vector<RejectReason> reasons;
  for (const auto& v : decision.verdicts) {
    if (v.passed) continue;
    RejectReason r{v.node_id, "", ""};
    for (const auto& c : v.checks) {
      if (c.passed) continue;
      if (r.requirement.empty()) r.requirement = c.requirement;
      if (!r.detail.empty()) r.detail += "; ";
      r.detail += fmt::format("{}: {}", c.requirement, c.measured);
    }
    reasons.push_back(std::move(r));
  }
  return reasons;
}

Negotiation negotiate(const DeploymentRequest& request, Inventory& inventory, const Topology& topo,
                      const SchedulerConfig& config, Millis now, std::optional<Millis> ttl) {
  const InventoryView view = inventory.snapshot();
  Negotiation n{Rejected{}, decide(request, *view, topo, config)};
  if (!n.decision.chosen) {
    n.outcome = Rejected{reject_reasons(n.decision)};
    return n;
  }
  const FilterVerdict* verdict = n.decision.verdict_for(*n.decision.chosen);
  const auto held = inventory.hold(request.id, verdict->node_id, effective_demand(request, config),
                                   network_reservations(topo, verdict->flows), now, ttl);
  if (const auto* shortfall = std::get_if<InsufficientResources>(&held)) {
    n.outcome = Rejected{{{verdict->node_id, "hold", shortfall->to_string()}}};
    return n;
  }
  const auto& reservation = std::get<Reservation>(held);
  n.outcome = Accepted{reservation.id, verdict->node_id, verdict->flows};
  return n;
}

json to_json(const RejectReason& r) {
  return {{"node", r.node_id}, {"requirement", r.requirement}, {"detail", r.detail}};
}

json to_json(const NegotiationOutcome& o) {
  if (const auto* a = std::get_if<Accepted>(&o))
    return {{"outcome", "Accepted"},
            {"reservation_id", a->reservation_id},
            {"candidate", a->candidate_node}};
  json reasons = json::array();
  for (const auto& r : std::get<Rejected>(o).reasons) reasons.push_back(to_json(r));
  return {{"outcome", "Rejected"}, {"reasons", reasons}};
}

}  // namespace foglet
