#include "foglet/inventory.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace foglet {

std::string_view to_string(Reservation::State s) {
  switch (s) {
    case Reservation::State::Held: return "Held";
    case Reservation::State::Committed: return "Committed";
    case Reservation::State::Released: return "Released";
    case Reservation::State::Expired: return "Expired";
  }
  return "?";
}

std::string InsufficientResources::to_string() const {
  if (dimension == "link_down") return fmt::format("link {} is down", subject);
  return fmt::format("insufficient {} on {} (short by {})", dimension, subject, shortfall);
}

std::optional<std::size_t> InventoryData::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> InventoryData::link_index(const std::string& id) const {
  for (std::size_t i = 0; i < links.size(); ++i)
    if (links[i].id == id) return i;
  return std::nullopt;
}

const NodeState* InventoryData::node(const std::string& id) const {
  const auto i = node_index(id);
  return i ? &nodes[*i] : nullptr;
}

const LinkState* InventoryData::link(const std::string& id) const {
  const auto i = link_index(id);
  return i ? &links[*i] : nullptr;
}

Residuals InventoryData::residuals() const {
  Residuals r(links.size());
  for (std::size_t i = 0; i < links.size(); ++i)
    if (links[i].up) r[i] = links[i].residual();
  return r;
}

bool InventoryData::same_state(const InventoryData& o) const {
  if (nodes != o.nodes || links != o.links || placements != o.placements) return false;
  auto held = [](const InventoryData& d) {
    std::vector<const Reservation*> out;
    for (const auto& [id, r] : d.reservations)
      if (r.state == Reservation::State::Held) out.push_back(&r);
    return out;
  };
  const auto a = held(*this), b = held(o);
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](const Reservation* x, const Reservation* y) { return *x == *y; });
}

namespace {

json network_to_json(const std::vector<NetworkReservation>& net) {
  json out = json::array();
  for (const auto& n : net) out.push_back({{"path", n.path}, {"bandwidth_kbps", n.bandwidth.kbps()}});
  return out;
}

std::vector<NetworkReservation> network_from_json(const json& j) {
  std::vector<NetworkReservation> out;
  for (const auto& n : j)
    out.push_back({n.at("path").get<std::vector<std::string>>(),
                   Bandwidth::kbps(n.at("bandwidth_kbps").get<std::int64_t>())});
  return out;
}

json reservation_to_json(const Reservation& r) {
  return {{"id", r.id},
          {"request_id", r.request_id},
          {"node", r.node_id},
          {"resources", to_json(r.resources)},
          {"network", network_to_json(r.network)},
          {"created_at_ms", r.created_at.count()},
          {"ttl_ms", r.ttl.count()},
          {"state", to_string(r.state)}};
}

Reservation reservation_from_json(const json& j) {
  Reservation r;
  r.id = j.at("id").get<std::string>();
  r.request_id = j.at("request_id").get<std::string>();
  r.node_id = j.at("node").get<std::string>();
  r.resources = resource_vector_from_json(j.at("resources"));
  r.network = network_from_json(j.at("network"));
  r.created_at = Millis(j.at("created_at_ms").get<std::int64_t>());
  r.ttl = Millis(j.at("ttl_ms").get<std::int64_t>());
  const auto s = j.at("state").get<std::string>();
  for (auto st : {Reservation::State::Held, Reservation::State::Committed,
                  Reservation::State::Released, Reservation::State::Expired})
    if (to_string(st) == s) r.state = st;
  return r;
}

// Aggregate bandwidth per link across all reserved paths.
std::map<std::string, Bandwidth> per_link_demand(const std::vector<NetworkReservation>& net) {
  std::map<std::string, Bandwidth> demand;
  for (const auto& n : net)
    for (const auto& l : n.path) demand[l] += n.bandwidth;
  return demand;
}

LinkState& link_or_throw(InventoryData& d, const std::string& id) {
  const auto i = d.link_index(id);
  if (!i) throw std::out_of_range("unknown link " + id);
  return d.links[*i];
}

NodeState& node_or_throw(InventoryData& d, const std::string& id) {
  const auto i = d.node_index(id);
  if (!i) throw std::out_of_range("unknown node " + id);
  return d.nodes[*i];
}

}  // namespace

json InventoryData::to_json() const {
  json ns = json::array(), ls = json::array(), rs = json::array(), ps = json::array();
  for (const auto& n : nodes)
    ns.push_back({{"id", n.id},
                  {"capacity", foglet::to_json(n.capacity)},
                  {"allocated", foglet::to_json(n.allocated)},
                  {"reserved", foglet::to_json(n.reserved)}});
  for (const auto& l : links)
    ls.push_back({{"id", l.id},
                  {"capacity_kbps", l.capacity.kbps()},
                  {"allocated_kbps", l.allocated.kbps()},
                  {"reserved_kbps", l.reserved.kbps()},
                  {"up", l.up}});
  for (const auto& [id, r] : reservations) rs.push_back(reservation_to_json(r));
  for (const auto& [id, p] : placements) ps.push_back(foglet::to_json(p));
  return {{"nodes", ns},
          {"links", ls},
          {"reservations", rs},
          {"placements", ps},
          {"next_reservation", next_reservation}};
}

InventoryData InventoryData::from_json(const json& j) {
  InventoryData d;
  for (const auto& n : j.at("nodes"))
    d.nodes.push_back({n.at("id").get<std::string>(), resource_vector_from_json(n.at("capacity")),
                       resource_vector_from_json(n.at("allocated")),
                       resource_vector_from_json(n.at("reserved"))});
  for (const auto& l : j.at("links"))
    d.links.push_back({l.at("id").get<std::string>(),
                       Bandwidth::kbps(l.at("capacity_kbps").get<std::int64_t>()),
                       Bandwidth::kbps(l.at("allocated_kbps").get<std::int64_t>()),
                       Bandwidth::kbps(l.at("reserved_kbps").get<std::int64_t>()),
                       l.at("up").get<bool>()});
  for (const auto& r : j.at("reservations")) {
    auto res = reservation_from_json(r);
    d.reservations.emplace(res.id, std::move(res));
  }
  for (const auto& p : j.at("placements")) {
    auto pl = placement_from_json(p);
    d.placements.emplace(pl.request_id, std::move(pl));
  }
  d.next_reservation = j.at("next_reservation").get<std::uint64_t>();
  return d;
}

namespace inventory_ops {

void apply_hold(InventoryData& d, const Reservation& r) {
  node_or_throw(d, r.node_id).reserved += r.resources;
  for (const auto& [link, bw] : per_link_demand(r.network)) link_or_throw(d, link).reserved += bw;
  d.reservations[r.id] = r;
  d.next_reservation = std::max<std::uint64_t>(d.next_reservation, std::stoull(r.id.substr(4)) + 1);
}

void apply_commit(InventoryData& d, const std::string& reservation_id, const Placement& p) {
  auto& r = d.reservations.at(reservation_id);
  auto& node = node_or_throw(d, r.node_id);
  node.reserved -= r.resources;
  node.allocated += r.resources;
  for (const auto& [link, bw] : per_link_demand(r.network)) {
    auto& ls = link_or_throw(d, link);
    ls.reserved -= bw;
    ls.allocated += bw;
  }
  r.state = Reservation::State::Committed;
  d.placements[p.request_id] = p;
}

void apply_release(InventoryData& d, const std::string& reservation_id,
                   Reservation::State final_state) {
  auto& r = d.reservations.at(reservation_id);
  node_or_throw(d, r.node_id).reserved -= r.resources;
  for (const auto& [link, bw] : per_link_demand(r.network)) link_or_throw(d, link).reserved -= bw;
  r.state = final_state;
}

std::vector<std::string> apply_evict(InventoryData& d, const std::string& node_id) {
  auto& node = node_or_throw(d, node_id);
  std::vector<std::string> evicted;
  for (auto it = d.placements.begin(); it != d.placements.end();) {
    const auto& p = it->second;
    if (p.node_id != node_id) {
      ++it;
      continue;
    }
    node.allocated -= p.allocated;
    for (const auto& [link, bw] : per_link_demand(p.network_reservations))
      link_or_throw(d, link).allocated -= bw;
    evicted.push_back(p.request_id);
    it = d.placements.erase(it);
  }
  return evicted;
}

void apply_link(InventoryData& d, const std::string& link_id, bool up) {
  link_or_throw(d, link_id).up = up;
}

void apply(InventoryData& d, const json& op) {
  const auto kind = op.at("op").get<std::string>();
  if (kind == "hold") {
    apply_hold(d, reservation_from_json(op.at("reservation")));
  } else if (kind == "commit") {
    apply_commit(d, op.at("reservation").get<std::string>(), placement_from_json(op.at("placement")));
  } else if (kind == "release") {
    apply_release(d, op.at("reservation").get<std::string>(), Reservation::State::Released);
  } else if (kind == "expire") {
    for (const auto& id : op.at("ids"))
      apply_release(d, id.get<std::string>(), Reservation::State::Expired);
  } else if (kind == "evict") {
    apply_evict(d, op.at("node").get<std::string>());
  } else if (kind == "link") {
    apply_link(d, op.at("link").get<std::string>(), op.at("up").get<bool>());
  } else {
    throw storage::StorageError("unknown inventory op " + kind);
  }
}

}  // namespace inventory_ops

Inventory::Inventory(const Topology& topo, Millis default_ttl) : default_ttl_(default_ttl) {
  auto d = std::make_shared<InventoryData>();
  for (const auto& n : topo.nodes()) d->nodes.push_back({n.id, n.capacity, {}, {}});
  for (const auto& l : topo.links())
    d->links.push_back({l.id, l.bandwidth, Bandwidth::kbps(0), Bandwidth::kbps(0), l.up});
  current_ = std::move(d);
}

Inventory::Inventory(InventoryData data, Millis default_ttl)
    : default_ttl_(default_ttl), current_(std::make_shared<InventoryData>(std::move(data))) {}

InventoryView Inventory::snapshot() const {
  std::lock_guard lock(view_mutex_);
  return current_;
}

void Inventory::subscribe(std::function<void(const InventoryEvent&)> handler) {
  std::lock_guard lock(write_mutex_);
  handlers_.push_back(std::move(handler));
}

void Inventory::publish(std::shared_ptr<const InventoryData> next, const json& op,
                        std::vector<InventoryEvent> events) {
  {
    std::lock_guard lock(view_mutex_);
    current_ = next;
  }
  if (journal_) {
    journal_->append({storage::RecordType::InventoryOp, op.dump()});
    if (++ops_since_snapshot_ >= snapshot_every_) {
      journal_->append({storage::RecordType::InventorySnapshot, next->to_json().dump()});
      ops_since_snapshot_ = 0;
    }
  }
  for (const auto& e : events)
    for (const auto& h : handlers_) h(e);
}

HoldResult Inventory::hold(const std::string& request_id, const std::string& node_id,
                           const ResourceVector& resources,
                           const std::vector<NetworkReservation>& network, Millis now,
                           std::optional<Millis> ttl) {
  std::lock_guard lock(write_mutex_);
  const auto& cur = *snapshot();
  const NodeState* node = cur.node(node_id);
  if (!node) throw std::out_of_range("unknown node " + node_id);
  if (!resources.is_non_negative()) throw std::invalid_argument("negative resource request");

  const ResourceVector free = node->free();
  if (resources.millicores > free.millicores)
    return InsufficientResources{node_id, "vcpus",
                                 static_cast<double>(resources.millicores - free.millicores) / 1000.0};
  if (resources.ram_mib > free.ram_mib)
    return InsufficientResources{node_id, "ram_mib", static_cast<double>(resources.ram_mib - free.ram_mib)};
  if (resources.disk_gib > free.disk_gib)
    return InsufficientResources{node_id, "disk_gib",
                                 static_cast<double>(resources.disk_gib - free.disk_gib)};
  for (const auto& [link_id, bw] : per_link_demand(network)) {
    const LinkState* link = cur.link(link_id);
    if (!link) throw std::out_of_range("unknown link " + link_id);
    if (!link->up) return InsufficientResources{link_id, "link_down", 0};
    if (bw < Bandwidth::kbps(0)) throw std::invalid_argument("negative bandwidth");
    if (bw > link->residual())
      return InsufficientResources{link_id, "bandwidth_mbps", (bw - link->residual()).mbps()};
  }

  auto next = std::make_shared<InventoryData>(cur);
  Reservation r{fmt::format("res-{}", next->next_reservation),
                request_id,
                node_id,
                resources,
                network,
                now,
                ttl.value_or(default_ttl_),
                Reservation::State::Held};
  inventory_ops::apply_hold(*next, r);
  publish(std::move(next), {{"op", "hold"}, {"reservation", reservation_to_json(r)}}, {});
  return r;
}

std::optional<InvalidState> Inventory::commit(const std::string& reservation_id, Placement placement) {
  std::lock_guard lock(write_mutex_);
  const auto& cur = *snapshot();
  const auto it = cur.reservations.find(reservation_id);
  if (it == cur.reservations.end()) return InvalidState{reservation_id, "Unknown"};
  const auto& r = it->second;
  if (r.state != Reservation::State::Held) return InvalidState{reservation_id, std::string(to_string(r.state))};

  placement.request_id = r.request_id;
  placement.node_id = r.node_id;
  placement.allocated = r.resources;
  placement.network_reservations = r.network;
  placement.state = Placement::State::Running;

  auto next = std::make_shared<InventoryData>(cur);
  inventory_ops::apply_commit(*next, reservation_id, placement);
  publish(std::move(next),
          {{"op", "commit"}, {"reservation", reservation_id}, {"placement", to_json(placement)}},
          {PlacementCreated{placement}});
  return std::nullopt;
}

std::optional<InvalidState> Inventory::release(const std::string& reservation_id) {
  std::lock_guard lock(write_mutex_);
  const auto& cur = *snapshot();
  const auto it = cur.reservations.find(reservation_id);
  if (it == cur.reservations.end()) return InvalidState{reservation_id, "Unknown"};
  if (it->second.state != Reservation::State::Held)
    return InvalidState{reservation_id, std::string(to_string(it->second.state))};
  auto next = std::make_shared<InventoryData>(cur);
  inventory_ops::apply_release(*next, reservation_id, Reservation::State::Released);
  publish(std::move(next), {{"op", "release"}, {"reservation", reservation_id}}, {});
  return std::nullopt;
}

std::vector<std::string> Inventory::expire_reservations(Millis now) {
  std::lock_guard lock(write_mutex_);
  const auto& cur = *snapshot();
  std::vector<std::string> expired;
  for (const auto& [id, r] : cur.reservations)
    if (r.state == Reservation::State::Held && r.created_at + r.ttl < now) expired.push_back(id);
  if (expired.empty()) return expired;
  auto next = std::make_shared<InventoryData>(cur);
  for (const auto& id : expired) inventory_ops::apply_release(*next, id, Reservation::State::Expired);
  publish(std::move(next), {{"op", "expire"}, {"ids", expired}}, {});
  return expired;
}

std::vector<std::string> Inventory::evict_placements_on(const std::string& node_id) {
  std::lock_guard lock(write_mutex_);
  const auto& cur = *snapshot();
  if (!cur.node(node_id)) throw std::out_of_range("unknown node " + node_id);
  std::vector<InventoryEvent> events;
  for (const auto& [id, p] : cur.placements)
    if (p.node_id == node_id) {
      Placement evicted = p;
      evicted.state = Placement::State::Evicted;
      events.emplace_back(PlacementEvicted{std::move(evicted)});
    }
  if (events.empty()) return {};
  auto next = std::make_shared<InventoryData>(cur);
  auto ids = inventory_ops::apply_evict(*next, node_id);
  publish(std::move(next), {{"op", "evict"}, {"node", node_id}}, std::move(events));
  return ids;
}

void Inventory::set_link_up(const std::string& link_id, bool up) {
  std::lock_guard lock(write_mutex_);
  const auto& cur = *snapshot();
  const auto idx = cur.link_index(link_id);
  if (!idx) throw std::out_of_range("unknown link " + link_id);
  if (cur.links[*idx].up == up) return;
  auto next = std::make_shared<InventoryData>(cur);
  inventory_ops::apply_link(*next, link_id, up);
  publish(std::move(next), {{"op", "link"}, {"link", link_id}, {"up", up}},
          {LinkStateChanged{*idx, link_id, up}});
}

void Inventory::persist(const std::filesystem::path& path) const {
  const std::vector<storage::Record> records{
      {storage::RecordType::InventorySnapshot, snapshot()->to_json().dump()}};
  storage::write_records(path, records);
}

InventoryData Inventory::replay(std::span<const storage::Record> records) {
  std::optional<std::size_t> last_snapshot;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].type == storage::RecordType::InventorySnapshot) last_snapshot = i;
  if (!last_snapshot) throw storage::StorageError("no inventory snapshot record");
  try {
    InventoryData d = InventoryData::from_json(json::parse(records[*last_snapshot].payload));
    for (std::size_t i = *last_snapshot + 1; i < records.size(); ++i)
      if (records[i].type == storage::RecordType::InventoryOp)
        inventory_ops::apply(d, json::parse(records[i].payload));
    return d;
  } catch (const json::exception& e) {
    throw storage::StorageError(std::string("corrupt inventory record: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw storage::StorageError(std::string("inconsistent inventory record: ") + e.what());
  }
}

std::unique_ptr<Inventory> Inventory::restore(const std::filesystem::path& path, Millis default_ttl) {
  const auto records = storage::read_records(path);
  return std::make_unique<Inventory>(replay(records), default_ttl);
}

void Inventory::attach_journal(const std::filesystem::path& path, std::size_t snapshot_every) {
  std::lock_guard lock(write_mutex_);
  journal_ = std::make_unique<storage::RecordWriter>(path);
  snapshot_every_ = std::max<std::size_t>(1, snapshot_every);
  ops_since_snapshot_ = 0;
  journal_->append({storage::RecordType::InventorySnapshot, snapshot()->to_json().dump()});
}

}  // namespace foglet
