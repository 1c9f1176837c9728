#pragma once

#include <array>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "foglet/units.hpp"

namespace foglet {

using json = nlohmann::json;

enum class Tier { Cloud, EdgeCloudlet, EdgeGateway, SwarmOfThings };

enum class ComputeProfile { GeneralPurpose, ComputeOptimized, MemoryOptimized, StorageOptimized };

enum class NetworkProfile {
  BestEffort,
  InteractiveApplication,
  SignalingAndVideoStreaming,
  InteractiveRealTimeVideo,
};

inline constexpr std::array kAllNetworkProfiles = {
    NetworkProfile::BestEffort, NetworkProfile::InteractiveApplication,
    NetworkProfile::SignalingAndVideoStreaming, NetworkProfile::InteractiveRealTimeVideo};

std::string_view to_string(Tier t);
std::string_view to_string(ComputeProfile p);
std::string_view to_string(NetworkProfile p);
// Accept both CamelCase and snake_case spellings.
std::optional<Tier> parse_tier(std::string_view s);
std::optional<ComputeProfile> parse_compute_profile(std::string_view s);
std::optional<NetworkProfile> parse_network_profile(std::string_view s);

inline bool can_host(Tier t) { return t != Tier::SwarmOfThings; }

struct ThresholdRow {
  std::optional<Bandwidth> min_bandwidth;
  std::optional<double> max_latency_ms;
  std::optional<double> max_jitter_ms;
  bool operator==(const ThresholdRow&) const = default;
};

// One row per NetworkProfile, indexed by the enum value.
class ProfileThresholds {
 public:
  const ThresholdRow& operator[](NetworkProfile p) const { return rows_[index(p)]; }
  ThresholdRow& operator[](NetworkProfile p) { return rows_[index(p)]; }
  bool operator==(const ProfileThresholds&) const = default;

 private:
  static std::size_t index(NetworkProfile p) { return static_cast<std::size_t>(p); }
  std::array<ThresholdRow, 4> rows_{};
};

ProfileThresholds default_thresholds();

struct PeerRef {
  enum class Kind { Endpoint, Component };
  Kind kind = Kind::Endpoint;
  std::string id;
  bool operator==(const PeerRef&) const = default;
};

// A constant-rate stream between the component and a peer. Inbound streams
// originate at the peer (e.g. a camera), outbound ones at the component.
struct FlowSpec {
  enum class Direction { Inbound, Outbound };
  Direction direction = Direction::Outbound;
  PeerRef peer;
  Bandwidth rate;
  bool operator==(const FlowSpec&) const = default;
};

struct ApplicationComponent {
  std::string name;
  std::string image;
  std::vector<FlowSpec> flows;
  bool operator==(const ApplicationComponent&) const = default;
};

struct ComputeRequirement {
  ComputeProfile profile = ComputeProfile::GeneralPurpose;
  ResourceVector request;
  bool operator==(const ComputeRequirement&) const = default;
};

struct NetworkRequirement {
  NetworkProfile profile = NetworkProfile::BestEffort;
  std::string endpoint;
  bool operator==(const NetworkRequirement&) const = default;
};

struct LocationRequirement {
  std::string region;
  bool operator==(const LocationRequirement&) const = default;
};

struct AccessRightsRequirement {
  std::string label;
  bool operator==(const AccessRightsRequirement&) const = default;
};

using Requirement =
    std::variant<ComputeRequirement, NetworkRequirement, LocationRequirement, AccessRightsRequirement>;

std::string describe(const Requirement& r);

struct DeploymentRequest {
  std::string id;
  std::string tenant;
  ApplicationComponent component;
  std::vector<Requirement> requirements;
  Millis submitted_at{0};

  const ComputeRequirement* compute() const;
  const LocationRequirement* location() const;
  std::vector<const NetworkRequirement*> network() const;
  std::vector<const AccessRightsRequirement*> access_rights() const;

  bool operator==(const DeploymentRequest&) const = default;
};

struct NetworkReservation {
  std::vector<std::string> path;  // link ids
  Bandwidth bandwidth;
  bool operator==(const NetworkReservation&) const = default;
};

struct Placement {
  enum class State { Running, Evicted };
  std::string request_id;
  std::string tenant;
  std::string component;
  std::string node_id;
  ResourceVector allocated;
  std::vector<NetworkReservation> network_reservations;
  std::vector<FlowSpec> flows;  // the component's declared streams
  State state = State::Running;
  bool operator==(const Placement&) const = default;
};

struct ValidationError : std::runtime_error {
  enum class Kind { Malformed, UnknownReference };
  ValidationError(std::string field, std::string reason, Kind kind = Kind::Malformed);
  std::string field;
  std::string reason;
  Kind kind;
};

// Names the validator may resolve against; normally derived from a topology.
struct KnownReferences {
  std::set<std::string> endpoints;
  std::set<std::string> regions;
};

// Parses a request document (JSON-shaped), applies defaults and checks the
// structural invariants. `refs` enables endpoint/region resolution.
DeploymentRequest validate_request(const json& raw, const KnownReferences* refs = nullptr);

json to_json(const DeploymentRequest& r);
json to_json(const Placement& p);
Placement placement_from_json(const json& j);
json to_json(const FlowSpec& f);
FlowSpec flow_spec_from_json(const json& j);
json to_json(const ResourceVector& v);
ResourceVector resource_vector_from_json(const json& j);

}  // namespace foglet
