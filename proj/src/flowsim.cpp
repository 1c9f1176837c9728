#include "foglet/flowsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace foglet {

std::string_view to_string(FlowState s) {
  switch (s) {
    case FlowState::Active: return "Active";
    case FlowState::Caching: return "Caching";
    case FlowState::Stalled: return "Stalled";
  }
  return "?";
}

namespace {

FlowState parse_flow_state(const std::string& s) {
  if (s == "Caching") return FlowState::Caching;
  if (s == "Stalled") return FlowState::Stalled;
  return FlowState::Active;
}

__extension__ using Wide = __int128;

double bits_to_bytes(std::int64_t bits) { return static_cast<double>(bits) / 8.0; }

}  // namespace

FlowSim::FlowSim(const Topology& topo, double drain_multiplier)
    : topo_(&topo), drain_multiplier_(drain_multiplier) {
  for (const auto& l : topo.links()) link_up_.push_back(l.up);
}

bool FlowSim::path_up(const Path& p) const {
  return std::all_of(p.links.begin(), p.links.end(), [&](LinkIndex l) { return link_up_[l]; });
}

// State of a flow whose path has a down link: buffered at the source's node
// when a hosted component there can cache, dropped otherwise.
FlowState FlowSim::blocked_state(const Flow& f) const {
  return f.cache_node ? FlowState::Caching : FlowState::Stalled;
}

const Flow& FlowSim::activate_flow(FlowActivation spec) {
  Flow f;
  const std::string base = spec.source + "->" + spec.sink;
  const int n = ++id_uses_[base];
  f.id = n == 1 ? base : fmt::format("{}#{}", base, n);
  if (spec.source_is_component && topo_->node(spec.source_node).cache_mib > 0)
    f.cache_node = spec.source_node;
  f.spec = std::move(spec);
  f.state = path_up(f.spec.path) ? FlowState::Active : blocked_state(f);
  flows_.push_back(std::move(f));
  return flows_.back();
}

std::vector<std::string> FlowSim::deactivate_flows_of(const std::string& request_id) {
  std::vector<std::string> removed;
  std::erase_if(flows_, [&](const Flow& f) {
    const bool hit = f.spec.owner_request == request_id || f.spec.peer_request == request_id;
    if (hit) removed.push_back(f.id);
    return hit;
  });
  return removed;
}

std::int64_t FlowSim::cache_capacity_bits(NodeIndex n) const {
  return topo_->node(n).cache_mib * kBitsPerMiB;
}

std::int64_t FlowSim::cache_occupied_bits(NodeIndex n) const {
  std::int64_t occupied = 0;
  for (const auto& f : flows_)
    if (f.cache_node == n) occupied += f.bits_cached;
  return occupied;
}

LinkLedger FlowSim::ledger() const {
  if (ledger_) return ledger_();
  LinkLedger l;
  for (LinkIndex i = 0; i < link_up_.size(); ++i) {
    l.reserved.push_back(Bandwidth::kbps(0));
    l.residual.push_back(link_up_[i] ? std::optional(topo_->link(i).bandwidth) : std::nullopt);
  }
  return l;
}

Bandwidth FlowSim::drain_rate(const Flow& f, const LinkLedger& ledger) const {
  if (f.state != FlowState::Active || f.bits_cached == 0) return Bandwidth::kbps(0);
  Bandwidth rate = Bandwidth::kbps(std::llround(drain_multiplier_ * static_cast<double>(f.spec.rate.kbps())));
  for (LinkIndex l : f.spec.path.links)
    rate = std::min(rate, ledger.residual[l].value_or(Bandwidth::kbps(0)));
  return std::max(rate, Bandwidth::kbps(0));
}

std::vector<Bandwidth> FlowSim::offered(const LinkLedger& ledger) const {
  std::vector<Bandwidth> load(link_up_.size());
  for (const auto& f : flows_) {
    if (f.state != FlowState::Active) continue;
    const Bandwidth total = f.spec.rate + drain_rate(f, ledger);
    for (LinkIndex l : f.spec.path.links) load[l] += total;
  }
  return load;
}

void FlowSim::advance(Millis dt) {
  if (dt.count() <= 0) throw std::invalid_argument("advance requires dt > 0");
  const LinkLedger led = ledger();

  // Split each cache's free space across its caching flows in proportion
  // to demand, so the outcome does not depend on flow order.
  std::map<NodeIndex, std::pair<std::int64_t, std::int64_t>> cache_budget;  // demand, free
  for (const auto& f : flows_)
    if (f.state == FlowState::Caching) cache_budget[*f.cache_node].first += f.spec.rate.bits_over(dt);
  for (auto& [node, budget] : cache_budget)
    budget.second = std::max<std::int64_t>(0, cache_capacity_bits(node) - cache_occupied_bits(node));

  std::vector<Bandwidth> drains(flows_.size());
  for (std::size_t i = 0; i < flows_.size(); ++i) drains[i] = drain_rate(flows_[i], led);

  for (std::size_t i = 0; i < flows_.size(); ++i) {
    auto& f = flows_[i];
    const std::int64_t produced = f.spec.rate.bits_over(dt);
    f.bits_sourced += produced;
    switch (f.state) {
      case FlowState::Active: {
        f.bits_delivered += produced;
        const std::int64_t drained = std::min(f.bits_cached, drains[i].bits_over(dt));
        f.bits_cached -= drained;
        f.bits_delivered += drained;
        break;
      }
      case FlowState::Caching: {
        const auto [demand, free] = cache_budget.at(*f.cache_node);
        std::int64_t stored = produced;
        if (demand > free) {
          stored = static_cast<std::int64_t>(static_cast<Wide>(free) * produced / demand);
        }
        f.bits_cached += stored;
        f.bits_lost += produced - stored;
        f.bits_cached_peak = std::max(f.bits_cached_peak, f.bits_cached);
        break;
      }
      case FlowState::Stalled:
        f.bits_lost += produced;
        break;
    }
  }
  now_ += dt;
  if (record_timeseries_) record_row();
}

void FlowSim::on_link_state_changed(const LinkStateChanged& event) {
  link_up_.at(event.link) = event.up;
  for (auto& f : flows_) {
    const bool crosses = std::find(f.spec.path.links.begin(), f.spec.path.links.end(), event.link) !=
                         f.spec.path.links.end();
    if (!crosses) continue;
    if (!event.up && f.state == FlowState::Active) {
      f.state = blocked_state(f);
    } else if (event.up && f.state != FlowState::Active && path_up(f.spec.path)) {
      f.state = FlowState::Active;
    }
  }
}

const Flow* FlowSim::find(const std::string& id) const {
  for (const auto& f : flows_)
    if (f.id == id) return &f;
  return nullptr;
}

MetricsReport FlowSim::report() const {
  const LinkLedger led = ledger();
  const auto load = offered(led);
  MetricsReport r;
  r.time = now_;
  for (LinkIndex l = 0; l < link_up_.size(); ++l) {
    const auto& link = topo_->link(l);
    LinkMetrics m;
    m.id = link.id;
    m.capacity = link.bandwidth;
    m.reserved = led.reserved.at(l);
    m.offered = load[l];
    m.utilization = static_cast<double>(load[l].kbps()) / static_cast<double>(link.bandwidth.kbps());
    m.up = link_up_[l];
    r.links.push_back(std::move(m));
  }
  for (const auto& f : flows_)
    r.flows.push_back({f.id, f.spec.source, f.spec.sink, f.state, f.spec.rate,
                       link_ids(*topo_, f.spec.path), f.bits_sourced, f.bits_delivered,
                       f.bits_cached, f.bits_lost, f.bits_cached_peak});
  for (NodeIndex n = 0; n < topo_->nodes().size(); ++n)
    if (topo_->node(n).cache_mib > 0)
      r.caches.push_back({topo_->node(n).id, cache_capacity_bits(n), cache_occupied_bits(n)});
  return r;
}

json MetricsReport::to_json() const {
  json links_j = json::object(), flows_j = json::object(), caches_j = json::object();
  for (const auto& l : links)
    links_j[l.id] = {{"capacity_mbps", l.capacity.mbps()},
                     {"reserved_mbps", l.reserved.mbps()},
                     {"offered_mbps", l.offered.mbps()},
                     {"utilization", l.utilization},
                     {"up", l.up}};
  for (const auto& f : flows)
    flows_j[f.id] = {{"source", f.source},
                     {"sink", f.sink},
                     {"state", to_string(f.state)},
                     {"rate_mbps", f.rate.mbps()},
                     {"path", f.path},
                     {"bits_sourced", f.bits_sourced},
                     {"bits_delivered", f.bits_delivered},
                     {"bits_cached", f.bits_cached},
                     {"bits_lost", f.bits_lost},
                     {"bits_cached_peak", f.bits_cached_peak},
                     {"bytes_sourced", bits_to_bytes(f.bits_sourced)},
                     {"bytes_delivered", bits_to_bytes(f.bits_delivered)},
                     {"bytes_cached", bits_to_bytes(f.bits_cached)},
                     {"bytes_lost", bits_to_bytes(f.bits_lost)},
                     {"bytes_cached_peak", bits_to_bytes(f.bits_cached_peak)}};
  for (const auto& c : caches)
    caches_j[c.node] = {{"capacity_bits", c.capacity_bits},
                        {"occupied_bits", c.occupied_bits},
                        {"occupied_bytes", bits_to_bytes(c.occupied_bits)}};
  return {{"time_s", static_cast<double>(time.count()) / 1000.0},
          {"links", links_j},
          {"flows", flows_j},
          {"caches", caches_j}};
}

void FlowSim::record_row() {
  const LinkLedger led = ledger();
  const auto load = offered(led);
  const double t = static_cast<double>(now_.count()) / 1000.0;
  for (LinkIndex l = 0; l < link_up_.size(); ++l) {
    const auto& link = topo_->link(l);
    link_rows_.push_back(fmt::format("{},{},{},{}", t, link.id, load[l].mbps(),
                                     static_cast<double>(load[l].kbps()) /
                                         static_cast<double>(link.bandwidth.kbps())));
  }
  for (const auto& f : flows_)
    flow_rows_.push_back(fmt::format("{},{},{},{},{},{}", t, f.id, f.bits_sourced, f.bits_delivered,
                                     f.bits_cached, f.bits_lost));
}

std::string FlowSim::link_timeseries_csv() const {
  std::string out = "t,link_id,offered_mbps,utilization\n";
  for (const auto& row : link_rows_) out += row + "\n";
  return out;
}

std::string FlowSim::flow_timeseries_csv() const {
  std::string out = "t,flow_id,sourced_bits,delivered_bits,cached_bits,lost_bits\n";
  for (const auto& row : flow_rows_) out += row + "\n";
  return out;
}

json FlowSim::to_json() const {
  json flows = json::array();
  for (const auto& f : flows_)
    flows.push_back({{"id", f.id},
                     {"source", f.spec.source},
                     {"sink", f.spec.sink},
                     {"owner_request", f.spec.owner_request},
                     {"peer_request", f.spec.peer_request},
                     {"source_is_component", f.spec.source_is_component},
                     {"source_node", topo_->node(f.spec.source_node).id},
                     {"path", link_ids(*topo_, f.spec.path)},
                     {"path_nodes",
                      [&] {
                        std::vector<std::string> ids;
                        for (NodeIndex n : f.spec.path.nodes) ids.push_back(topo_->node(n).id);
                        return ids;
                      }()},
                     {"rate_kbps", f.spec.rate.kbps()},
                     {"state", to_string(f.state)},
                     {"bits_sourced", f.bits_sourced},
                     {"bits_delivered", f.bits_delivered},
                     {"bits_cached", f.bits_cached},
                     {"bits_lost", f.bits_lost},
                     {"bits_cached_peak", f.bits_cached_peak}});
  return {{"now_ms", now_.count()},
          {"link_up", link_up_},
          {"id_uses", id_uses_},
          {"flows", flows},
          {"record_timeseries", record_timeseries_},
          {"link_rows", link_rows_},
          {"flow_rows", flow_rows_}};
}

void FlowSim::restore(const json& s) {
  auto node_of = [&](const std::string& id) {
    const auto n = topo_->find_node(id);
    if (!n) throw std::runtime_error("flow state references unknown node " + id);
    return *n;
  };
  now_ = Millis(s.at("now_ms").get<std::int64_t>());
  link_up_ = s.at("link_up").get<std::vector<bool>>();
  id_uses_ = s.at("id_uses").get<std::map<std::string, int>>();
  record_timeseries_ = s.at("record_timeseries").get<bool>();
  link_rows_ = s.at("link_rows").get<std::vector<std::string>>();
  flow_rows_ = s.at("flow_rows").get<std::vector<std::string>>();
  flows_.clear();
  for (const auto& j : s.at("flows")) {
    Flow f;
    f.id = j.at("id").get<std::string>();
    f.spec.source = j.at("source").get<std::string>();
    f.spec.sink = j.at("sink").get<std::string>();
    f.spec.owner_request = j.at("owner_request").get<std::string>();
    f.spec.peer_request = j.at("peer_request").get<std::string>();
    f.spec.source_is_component = j.at("source_is_component").get<bool>();
    f.spec.source_node = node_of(j.at("source_node").get<std::string>());
    for (const auto& l : j.at("path")) {
      const auto idx = topo_->find_link(l.get<std::string>());
      if (!idx) throw std::runtime_error("flow state references unknown link");
      f.spec.path.links.push_back(*idx);
    }
    for (const auto& n : j.at("path_nodes")) f.spec.path.nodes.push_back(node_of(n.get<std::string>()));
    f.spec.rate = Bandwidth::kbps(j.at("rate_kbps").get<std::int64_t>());
    f.state = parse_flow_state(j.at("state").get<std::string>());
    if (f.spec.source_is_component && topo_->node(f.spec.source_node).cache_mib > 0)
      f.cache_node = f.spec.source_node;
    f.bits_sourced = j.at("bits_sourced").get<std::int64_t>();
    f.bits_delivered = j.at("bits_delivered").get<std::int64_t>();
    f.bits_cached = j.at("bits_cached").get<std::int64_t>();
    f.bits_lost = j.at("bits_lost").get<std::int64_t>();
    f.bits_cached_peak = j.at("bits_cached_peak").get<std::int64_t>();
    flows_.push_back(std::move(f));
  }
}

}  // namespace foglet
