#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "foglet/topology.hpp"

namespace foglet {

enum class FlowState { Active, Caching, Stalled };
std::string_view to_string(FlowState s);

struct FlowActivation {
  std::string source;  // endpoint id or component name
  std::string sink;
  std::string owner_request;
  std::string peer_request;
  bool source_is_component = false;
  NodeIndex source_node = 0;
  Path path;  // source -> sink
  Bandwidth rate;
};

struct Flow {
  std::string id;
  FlowActivation spec;
  FlowState state = FlowState::Active;
  // Node buffering this flow's traffic during faults, if any.
  std::optional<NodeIndex> cache_node;
  // Counters in bits; sourced == delivered + cached + lost at all times.
  std::int64_t bits_sourced = 0;
  std::int64_t bits_delivered = 0;
  std::int64_t bits_cached = 0;
  std::int64_t bits_lost = 0;
  std::int64_t bits_cached_peak = 0;

  bool conserved() const { return bits_sourced == bits_delivered + bits_cached + bits_lost; }
};

// Per-link bandwidth bookkeeping supplied by the inventory.
struct LinkLedger {
  std::vector<Bandwidth> reserved;              // allocated + held
  std::vector<std::optional<Bandwidth>> residual;  // nullopt when down
};

struct LinkMetrics {
  std::string id;
  Bandwidth capacity;
  Bandwidth reserved;
  Bandwidth offered;
  double utilization = 0;
  bool up = true;
};

struct FlowMetrics {
  std::string id;
  std::string source;
  std::string sink;
  FlowState state = FlowState::Active;
  Bandwidth rate;
  std::vector<std::string> path;
  std::int64_t bits_sourced = 0;
  std::int64_t bits_delivered = 0;
  std::int64_t bits_cached = 0;
  std::int64_t bits_lost = 0;
  std::int64_t bits_cached_peak = 0;
};

struct CacheMetrics {
  std::string node;
  std::int64_t capacity_bits = 0;
  std::int64_t occupied_bits = 0;
};

struct MetricsReport {
  Millis time{0};
  std::vector<LinkMetrics> links;
  std::vector<FlowMetrics> flows;
  std::vector<CacheMetrics> caches;

  // Stable, key-sorted document: {time_s, links: {id: ...}, flows: {id: ...}, caches: {node: ...}}.
  json to_json() const;
};

// Constant-rate fluid simulation of the streams between placements and
// endpoints over a virtual clock.
class FlowSim {
 public:
  FlowSim(const Topology& topo, double drain_multiplier = 2.0);

  const Flow& activate_flow(FlowActivation spec);
  // Drops every flow owned by or pointing at the request.
  std::vector<std::string> deactivate_flows_of(const std::string& request_id);

  // Moves the clock forward by dt (> 0) and accrues bytes.
  void advance(Millis dt);
  void on_link_state_changed(const LinkStateChanged& event);

  MetricsReport report() const;

  void set_ledger_source(std::function<LinkLedger()> source) { ledger_ = std::move(source); }

  // Records one CSV row per link and per flow after every advance.
  void enable_timeseries(bool on) { record_timeseries_ = on; }
  std::string link_timeseries_csv() const;
  std::string flow_timeseries_csv() const;

  Millis now() const { return now_; }
  const std::vector<Flow>& flows() const { return flows_; }
  const Flow* find(const std::string& id) const;
  std::int64_t cache_occupied_bits(NodeIndex n) const;
  std::int64_t cache_capacity_bits(NodeIndex n) const;

  json to_json() const;
  void restore(const json& state);

 private:
  FlowState blocked_state(const Flow& f) const;
  bool path_up(const Path& p) const;
  LinkLedger ledger() const;
  Bandwidth drain_rate(const Flow& f, const LinkLedger& ledger) const;
  std::vector<Bandwidth> offered(const LinkLedger& ledger) const;
  void record_row();

  const Topology* topo_;
  double drain_multiplier_;
  std::vector<bool> link_up_;
  std::vector<Flow> flows_;
  std::map<std::string, int> id_uses_;
  Millis now_{0};
  std::function<LinkLedger()> ledger_;
  bool record_timeseries_ = false;
  std::vector<std::string> link_rows_;
  std::vector<std::string> flow_rows_;
};

}  // namespace foglet
