#include "foglet/engine.hpp"

#include <fmt/format.h>

#include "foglet/record_log.hpp"

namespace foglet {

std::string_view to_string(RequestState s) {
  switch (s) {
    case RequestState::Queued: return "Queued";
    case RequestState::Accepted: return "Accepted";
    case RequestState::Placed: return "Placed";
    case RequestState::Rejected: return "Rejected";
  }
  return "?";
}

namespace {

RequestState parse_request_state(const std::string& s) {
  if (s == "Accepted") return RequestState::Accepted;
  if (s == "Placed") return RequestState::Placed;
  if (s == "Rejected") return RequestState::Rejected;
  return RequestState::Queued;
}

json reasons_to_json(const std::vector<RejectReason>& reasons) {
  json out = json::array();
  for (const auto& r : reasons) out.push_back(to_json(r));
  return out;
}

std::vector<RejectReason> reasons_from_json(const json& j) {
  std::vector<RejectReason> out;
  for (const auto& r : j)
    out.push_back({r.at("node").get<std::string>(), r.at("requirement").get<std::string>(),
                   r.at("detail").get<std::string>()});
  return out;
}

json record_to_json(const RequestRecord& r) {
  json j = {{"request", to_json(r.request)},
            {"state", to_string(r.state)},
            {"reasons", reasons_to_json(r.reasons)},
            {"evicted", r.evicted}};
  if (r.placement) j["placement"] = to_json(*r.placement);
  return j;
}

RequestRecord record_from_json(const json& j) {
  RequestRecord r;
  r.request = validate_request(j.at("request"));
  r.state = parse_request_state(j.at("state").get<std::string>());
  r.reasons = reasons_from_json(j.at("reasons"));
  r.evicted = j.at("evicted").get<bool>();
  if (j.contains("placement")) r.placement = placement_from_json(j.at("placement"));
  return r;
}

}  // namespace

json DecisionRecord::to_json() const {
  return {{"request_id", request_id},
          {"outcome", outcome},
          {"candidate", candidate.empty() ? json(nullptr) : json(candidate)},
          {"reasons", reasons_to_json(reasons)},
          {"timestamp_ms", timestamp.count()},
          {"trace", trace}};
}

DecisionRecord DecisionRecord::from_json(const json& j) {
  DecisionRecord d;
  d.request_id = j.at("request_id").get<std::string>();
  d.outcome = j.at("outcome").get<std::string>();
  if (!j.at("candidate").is_null()) d.candidate = j.at("candidate").get<std::string>();
  d.reasons = reasons_from_json(j.at("reasons"));
  d.timestamp = Millis(j.at("timestamp_ms").get<std::int64_t>());
  d.trace = j.at("trace");
  return d;
}

Engine::Engine(Topology topology, EngineConfig config)
    : topology_(std::make_unique<Topology>(std::move(topology))), config_(std::move(config)) {
  inventory_ = std::make_unique<Inventory>(*topology_, config_.reservation_ttl);
  flowsim_ = std::make_unique<FlowSim>(*topology_, config_.drain_multiplier);
  wire();
}

void Engine::wire() {
  flowsim_->set_ledger_source([this] {
    const auto view = inventory_->snapshot();
    LinkLedger ledger;
    for (const auto& l : view->links) ledger.reserved.push_back(l.allocated + l.reserved);
    ledger.residual = view->residuals();
    return ledger;
  });
  inventory_->subscribe([this](const InventoryEvent& event) {
    if (const auto* evicted = std::get_if<PlacementEvicted>(&event)) {
      flowsim_->deactivate_flows_of(evicted->placement.request_id);
      auto it = requests_.find(evicted->placement.request_id);
      if (it != requests_.end()) it->second.evicted = true;
    }
  });
}

std::string Engine::submit(const json& document) {
  std::lock_guard lock(mutex_);
  const auto refs = topology_->known_references();
  DeploymentRequest request = validate_request(document, &refs);
  if (request.id.empty()) {
    do {
      request.id = fmt::format("req-{}", next_request_++);
    } while (requests_.contains(request.id));
  } else if (requests_.contains(request.id)) {
    throw ValidationError("id", "duplicate request id " + request.id);
  }
  if (!document.contains("submitted_at_ms")) request.submitted_at = now_;
  const std::string id = request.id;
  RequestRecord record;
  record.request = std::move(request);
  requests_.emplace(id, std::move(record));
  arrival_order_.push_back(id);
  queue_.push_back(id);
  return id;
}

bool Engine::has_pending() const {
  std::lock_guard lock(mutex_);
  return !queue_.empty();
}

std::vector<DecisionRecord> Engine::process() {
  std::lock_guard lock(mutex_);
  std::vector<DecisionRecord> out;
  while (!queue_.empty()) {
    const std::string id = queue_.front();
    queue_.pop_front();
    DecisionRecord d = transact(requests_.at(id));
    decisions_.push_back(d);
    if (audit_) audit_(d);
    out.push_back(std::move(d));
  }
  return out;
}

DecisionRecord Engine::transact(RequestRecord& record) {
  DecisionRecord d;
  d.request_id = record.request.id;
  inventory_->expire_reservations(now_);
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto n = negotiate(record.request, *inventory_, *topology_, config_.scheduler, now_,
                       config_.reservation_ttl);
    d.trace = to_json(n.decision, *topology_);
    if (const auto* rejected = std::get_if<Rejected>(&n.outcome)) {
      record.state = RequestState::Rejected;
      record.reasons = rejected->reasons;
      break;
    }
    const auto& accepted = std::get<Accepted>(n.outcome);
    record.state = RequestState::Accepted;
    if (pre_schedule_) pre_schedule_(record.request.id);
    const auto invalid = schedule(record, accepted);
    if (!invalid) {
      record.state = RequestState::Placed;
      d.candidate = accepted.candidate_node;
      break;
    }
    record.state = RequestState::Rejected;
    record.reasons = {{accepted.candidate_node, "reservation", invalid->reason}};
  }
  d.outcome = record.state == RequestState::Placed ? "Placed" : "Rejected";
  d.reasons = record.reasons;
  d.timestamp = now_;
  return d;
}

std::optional<InvalidState> Engine::schedule(RequestRecord& record, const Accepted& accepted) {
  inventory_->expire_reservations(now_);
  const auto& req = record.request;
  Placement p;
  p.request_id = req.id;
  p.tenant = req.tenant;
  p.component = req.component.name;
  p.node_id = accepted.candidate_node;
  p.allocated = effective_demand(req, config_.scheduler);
  p.network_reservations = network_reservations(*topology_, accepted.flows);
  p.flows = req.component.flows;
  if (auto invalid = inventory_->commit(accepted.reservation_id, p)) return invalid;
  for (const auto& f : accepted.flows)
    flowsim_->activate_flow({f.source, f.sink, f.owner_request, f.peer_request,
                             f.source_is_component, f.source_node, f.path, f.rate});
  record.placement = std::move(p);
  return std::nullopt;
}

bool Engine::set_link_state(const std::string& link_id, bool up) {
  std::lock_guard lock(mutex_);
  const auto event = topology_->set_link_state(link_id, up);
  if (!event) return false;
  inventory_->set_link_up(link_id, up);
  flowsim_->on_link_state_changed(*event);
  return true;
}

std::vector<std::string> Engine::evict_node(const std::string& node_id) {
  std::lock_guard lock(mutex_);
  if (!topology_->find_node(node_id)) throw EngineError("unknown node " + node_id);
  return inventory_->evict_placements_on(node_id);
}

void Engine::advance(Millis dt) {
  std::lock_guard lock(mutex_);
  flowsim_->advance(dt);
  now_ += dt;
  inventory_->expire_reservations(now_);
}

Millis Engine::now() const {
  std::lock_guard lock(mutex_);
  return now_;
}

MetricsReport Engine::report() const {
  std::lock_guard lock(mutex_);
  return flowsim_->report();
}

json Engine::report_json() const {
  std::lock_guard lock(mutex_);
  json j = flowsim_->report().to_json();
  j["placements"] = placements_json();
  return j;
}

std::optional<json> Engine::request_status(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = requests_.find(id);
  if (it == requests_.end()) return std::nullopt;
  const auto& r = it->second;
  json j = {{"id", id}, {"state", to_string(r.state)}, {"component", r.request.component.name}};
  if (r.placement) j["placement"] = to_json(*r.placement);
  if (r.state == RequestState::Rejected) j["reasons"] = reasons_to_json(r.reasons);
  if (r.evicted) j["evicted"] = true;
  return j;
}

std::optional<json> Engine::explain(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (auto it = decisions_.rbegin(); it != decisions_.rend(); ++it)
    if (it->request_id == id) return it->to_json();
  return std::nullopt;
}

std::optional<json> Engine::link_utilization(const std::string& link_id) const {
  std::lock_guard lock(mutex_);
  for (const auto& l : flowsim_->report().links)
    if (l.id == link_id)
      return json{{"link", l.id},
                  {"capacity_mbps", l.capacity.mbps()},
                  {"reserved_mbps", l.reserved.mbps()},
                  {"offered_mbps", l.offered.mbps()},
                  {"utilization", l.utilization},
                  {"up", l.up}};
  return std::nullopt;
}

json Engine::nodes_json() const {
  std::lock_guard lock(mutex_);
  const auto view = inventory_->snapshot();
  json out = json::array();
  for (NodeIndex n = 0; n < topology_->nodes().size(); ++n) {
    const Node& node = topology_->node(n);
    const NodeState& s = view->nodes.at(n);
    out.push_back({{"id", node.id},
                   {"tier", to_string(node.tier)},
                   {"region", node.region},
                   {"labels", node.labels},
                   {"cache_mib", node.cache_mib},
                   {"capacity", to_json(s.capacity)},
                   {"allocated", to_json(s.allocated)},
                   {"reserved", to_json(s.reserved)},
                   {"free", to_json(s.free())}});
  }
  return out;
}

json Engine::placements_json() const {
  std::lock_guard lock(mutex_);
  const auto view = inventory_->snapshot();
  json out = json::array();
  for (const auto& id : arrival_order_) {
    const auto it = view->placements.find(id);
    if (it != view->placements.end()) out.push_back(to_json(it->second));
  }
  return out;
}

json Engine::requests_json() const {
  std::lock_guard lock(mutex_);
  json out = json::array();
  for (const auto& id : arrival_order_) out.push_back(*request_status(id));
  return out;
}

json Engine::decisions_json() const {
  std::lock_guard lock(mutex_);
  json out = json::array();
  for (const auto& d : decisions_) out.push_back(d.to_json());
  return out;
}

std::optional<Placement> Engine::placement_of(const std::string& component,
                                              const std::string& tenant) const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, p] : inventory_->snapshot()->placements)
    if (p.component == component && p.tenant == tenant) return p;
  return std::nullopt;
}

void Engine::enable_timeseries(bool on) {
  std::lock_guard lock(mutex_);
  flowsim_->enable_timeseries(on);
}

std::string Engine::link_timeseries_csv() const {
  std::lock_guard lock(mutex_);
  return flowsim_->link_timeseries_csv();
}

std::string Engine::flow_timeseries_csv() const {
  std::lock_guard lock(mutex_);
  return flowsim_->flow_timeseries_csv();
}

void Engine::set_audit_sink(std::function<void(const DecisionRecord&)> sink) {
  std::lock_guard lock(mutex_);
  audit_ = std::move(sink);
}

void Engine::set_pre_schedule_hook(std::function<void(const std::string&)> hook) {
  std::lock_guard lock(mutex_);
  pre_schedule_ = std::move(hook);
}

void Engine::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mutex_);
  json requests = json::array();
  for (const auto& id : arrival_order_) requests.push_back(record_to_json(requests_.at(id)));
  json engine = {{"topology", topology_->to_json()},
                 {"config", to_json(config_)},
                 {"now_ms", now_.count()},
                 {"next_request", next_request_},
                 {"requests", requests},
                 {"queue", queue_},
                 {"decisions", decisions_json()}};
  const std::vector<storage::Record> records{
      {storage::RecordType::EngineSnapshot, engine.dump()},
      {storage::RecordType::InventorySnapshot, inventory_->snapshot()->to_json().dump()},
      {storage::RecordType::SimulationSnapshot, flowsim_->to_json().dump()}};
  storage::write_records(path, records);
}

std::unique_ptr<Engine> Engine::load(const std::filesystem::path& path) {
  const auto records = storage::read_records(path);
  const storage::Record* parts[3] = {nullptr, nullptr, nullptr};
  for (const auto& r : records) {
    switch (r.type) {
      case storage::RecordType::EngineSnapshot: parts[0] = &r; break;
      case storage::RecordType::InventorySnapshot: parts[1] = &r; break;
      case storage::RecordType::SimulationSnapshot: parts[2] = &r; break;
      default: break;
    }
  }
  if (!parts[0] || !parts[1] || !parts[2])
    throw storage::StorageError("checkpoint " + path.string() + " is incomplete");

  const json engine = json::parse(parts[0]->payload);
  auto e = std::make_unique<Engine>(Topology::load(engine.at("topology")),
                                    load_config(engine.at("config")));
  e->inventory_ = std::make_unique<Inventory>(
      InventoryData::from_json(json::parse(parts[1]->payload)), e->config_.reservation_ttl);
  e->flowsim_->restore(json::parse(parts[2]->payload));
  e->wire();
  e->now_ = Millis(engine.at("now_ms").get<std::int64_t>());
  e->next_request_ = engine.at("next_request").get<std::uint64_t>();
  for (const auto& r : engine.at("requests")) {
    RequestRecord rec = record_from_json(r);
    const std::string id = rec.request.id;
    e->arrival_order_.push_back(id);
    e->requests_.emplace(id, std::move(rec));
  }
  for (const auto& id : engine.at("queue")) e->queue_.push_back(id.get<std::string>());
  for (const auto& d : engine.at("decisions")) e->decisions_.push_back(DecisionRecord::from_json(d));
  return e;
}

}  // namespace foglet
