#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "foglet/model.hpp"
#include "foglet/record_log.hpp"
#include "foglet/topology.hpp"

namespace foglet {

struct NodeState {
  std::string id;
  ResourceVector capacity;
  ResourceVector allocated;
  ResourceVector reserved;

  ResourceVector free() const { return capacity - allocated - reserved; }
  bool operator==(const NodeState&) const = default;
};

struct LinkState {
  std::string id;
  Bandwidth capacity;
  Bandwidth allocated;
  Bandwidth reserved;
  bool up = true;

  Bandwidth residual() const { return capacity - allocated - reserved; }
  bool operator==(const LinkState&) const = default;
};

struct Reservation {
  enum class State { Held, Committed, Released, Expired };
  std::string id;
  std::string request_id;
  std::string node_id;
  ResourceVector resources;
  std::vector<NetworkReservation> network;
  Millis created_at{0};
  Millis ttl{0};
  State state = State::Held;
  bool operator==(const Reservation&) const = default;
};

std::string_view to_string(Reservation::State s);

struct InsufficientResources {
  std::string subject;    // node or link id
  std::string dimension;  // vcpus | ram_mib | disk_gib | bandwidth_mbps | link_down
  double shortfall = 0;
  std::string to_string() const;
};

struct InvalidState {
  std::string reservation_id;
  std::string reason;
};

// Point-in-time inventory contents. Views are never mutated once published.
struct InventoryData {
  std::vector<NodeState> nodes;
  std::vector<LinkState> links;
  std::map<std::string, Reservation> reservations;
  std::map<std::string, Placement> placements;  // Running placements by request id
  std::uint64_t next_reservation = 1;

  std::optional<std::size_t> node_index(const std::string& id) const;
  std::optional<std::size_t> link_index(const std::string& id) const;
  const NodeState* node(const std::string& id) const;
  const LinkState* link(const std::string& id) const;

  // Unreserved bandwidth per link, nullopt for Down links.
  Residuals residuals() const;

  // Resource state equality: node/link states, placements and Held
  // reservations. Released/expired history and counters are ignored.
  bool same_state(const InventoryData& o) const;
  bool operator==(const InventoryData& o) const { return same_state(o); }

  json to_json() const;
  static InventoryData from_json(const json& j);
};

using InventoryView = std::shared_ptr<const InventoryData>;

struct PlacementCreated {
  Placement placement;
};
struct PlacementEvicted {
  Placement placement;
};
using InventoryEvent = std::variant<PlacementCreated, PlacementEvicted, LinkStateChanged>;

using HoldResult = std::variant<Reservation, InsufficientResources>;

// Single writer for resource state. Every mutation builds a new immutable
// InventoryData and publishes it; snapshot() hands out the current one.
class Inventory {
 public:
  explicit Inventory(const Topology& topo, Millis default_ttl = Millis(30'000));
  explicit Inventory(InventoryData data, Millis default_ttl = Millis(30'000));

  Inventory(const Inventory&) = delete;
  Inventory& operator=(const Inventory&) = delete;

  InventoryView snapshot() const;
  Millis default_ttl() const { return default_ttl_; }

  // Tentatively reserves `resources` on the node and `network` bandwidth on
  // every listed path link. On failure nothing changes.
  HoldResult hold(const std::string& request_id, const std::string& node_id,
                  const ResourceVector& resources, const std::vector<NetworkReservation>& network,
                  Millis now, std::optional<Millis> ttl = std::nullopt);

  // Moves a Held reservation into allocations and records the placement.
  std::optional<InvalidState> commit(const std::string& reservation_id, Placement placement);
  std::optional<InvalidState> release(const std::string& reservation_id);

  // Expires Held reservations with created_at + ttl < now.
  std::vector<std::string> expire_reservations(Millis now);

  // Removes every placement on the node and frees what it held. Throws
  // std::out_of_range for an unknown node.
  std::vector<std::string> evict_placements_on(const std::string& node_id);

  // Mirrors a link-state change; emits LinkStateChanged only on change.
  void set_link_up(const std::string& link_id, bool up);

  void subscribe(std::function<void(const InventoryEvent&)> handler);

  // Single snapshot file.
  void persist(const std::filesystem::path& path) const;
  // Replays the last snapshot in the file plus any journal ops after it.
  static std::unique_ptr<Inventory> restore(const std::filesystem::path& path,
                                            Millis default_ttl = Millis(30'000));
  static InventoryData replay(std::span<const storage::Record> records);

  // Appends one op record per mutation to `path`, with a full snapshot
  // record every `snapshot_every` ops (and one immediately).
  void attach_journal(const std::filesystem::path& path, std::size_t snapshot_every = 64);

 private:
  void publish(std::shared_ptr<const InventoryData> next, const json& op,
               std::vector<InventoryEvent> events);

  Millis default_ttl_;
  mutable std::mutex view_mutex_;
  std::shared_ptr<const InventoryData> current_;
  std::mutex write_mutex_;
  std::vector<std::function<void(const InventoryEvent&)>> handlers_;
  std::unique_ptr<storage::RecordWriter> journal_;
  std::size_t snapshot_every_ = 64;
  std::size_t ops_since_snapshot_ = 0;
};

// Replayable state transitions shared by the live path and journal replay.
namespace inventory_ops {
void apply_hold(InventoryData& d, const Reservation& r);
void apply_commit(InventoryData& d, const std::string& reservation_id, const Placement& p);
void apply_release(InventoryData& d, const std::string& reservation_id,
                   Reservation::State final_state);
std::vector<std::string> apply_evict(InventoryData& d, const std::string& node_id);
void apply_link(InventoryData& d, const std::string& link_id, bool up);
void apply(InventoryData& d, const json& op);
}  // namespace inventory_ops

}  // namespace foglet
