#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "foglet/config.hpp"
#include "foglet/flowsim.hpp"
#include "foglet/inventory.hpp"
#include "foglet/negotiator.hpp"
#include "foglet/topology.hpp"

namespace foglet {

enum class RequestState { Queued, Accepted, Placed, Rejected };
std::string_view to_string(RequestState s);

struct RequestRecord {
  DeploymentRequest request;
  RequestState state = RequestState::Queued;
  std::optional<Placement> placement;
  std::vector<RejectReason> reasons;
  bool evicted = false;
};

// One audit entry per processed request.
struct DecisionRecord {
  std::string request_id;
  std::string outcome;  // Placed | Rejected
  std::string candidate;
  std::vector<RejectReason> reasons;
  Millis timestamp{0};
  json trace;  // filter verdicts and scores of the last negotiation attempt

  json to_json() const;
  static DecisionRecord from_json(const json& j);
};

// Thrown for engine-level failures the caller should surface (unknown ids,
// unreadable checkpoints).
struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The deployment pipeline on a virtual clock: FCFS request queue,
// negotiation, placement, link events and flow simulation. All public
// members are safe to call from several threads.
class Engine {
 public:
  Engine(Topology topology, EngineConfig config);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Validates and enqueues. Throws ValidationError. Returns the request id.
  std::string submit(const json& document);

  // Runs every queued request to completion in arrival order.
  std::vector<DecisionRecord> process();
  bool has_pending() const;

  // Throws TopologyError(UnknownId). Returns false when the link already
  // had that state.
  bool set_link_state(const std::string& link_id, bool up);
  // Evicts every placement on the node and stops their flows.
  std::vector<std::string> evict_node(const std::string& node_id);

  void advance(Millis dt);
  Millis now() const;

  MetricsReport report() const;
  json report_json() const;
  std::optional<json> request_status(const std::string& id) const;
  std::optional<json> explain(const std::string& id) const;
  std::optional<json> link_utilization(const std::string& link_id) const;
  json nodes_json() const;
  json placements_json() const;
  json requests_json() const;
  json decisions_json() const;

  std::optional<Placement> placement_of(const std::string& component,
                                        const std::string& tenant = "default") const;

  void enable_timeseries(bool on);
  std::string link_timeseries_csv() const;
  std::string flow_timeseries_csv() const;

  // Called after each decision is recorded.
  void set_audit_sink(std::function<void(const DecisionRecord&)> sink);
  // Called between a successful negotiation and the placement commit.
  void set_pre_schedule_hook(std::function<void(const std::string& request_id)> hook);

  const Topology& topology() const { return *topology_; }
  const EngineConfig& config() const { return config_; }
  InventoryView inventory_snapshot() const { return inventory_->snapshot(); }
  const FlowSim& flowsim() const { return *flowsim_; }

  // Checkpoint of the complete engine state in one record file.
  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<Engine> load(const std::filesystem::path& path);

 private:
  void wire();
  DecisionRecord transact(RequestRecord& record);
  std::optional<InvalidState> schedule(RequestRecord& record, const Accepted& accepted);

  mutable std::recursive_mutex mutex_;
  std::unique_ptr<Topology> topology_;
  EngineConfig config_;
  std::unique_ptr<Inventory> inventory_;
  std::unique_ptr<FlowSim> flowsim_;
  Millis now_{0};
  std::uint64_t next_request_ = 1;
  std::map<std::string, RequestRecord> requests_;
  std::vector<std::string> arrival_order_;
  std::deque<std::string> queue_;
  std::vector<DecisionRecord> decisions_;
  std::function<void(const DecisionRecord&)> audit_;
  std::function<void(const std::string&)> pre_schedule_;
};

}  // namespace foglet
