#include "foglet/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace foglet {

Bandwidth Bandwidth::mbps(double v) {
  if (std::isinf(v)) return unbounded();
  return Bandwidth(std::llround(v * 1000.0));
}

double Bandwidth::mbps() const {
  if (is_unbounded()) return std::numeric_limits<double>::infinity();
  return static_cast<double>(kbps_) / 1000.0;
}

std::string Bandwidth::to_string() const {
  if (is_unbounded()) return "inf Mbit/s";
  return fmt::format("{} Mbit/s", mbps());
}

ResourceVector ResourceVector::of(double vcpus, std::int64_t ram_mib, std::int64_t disk_gib) {
  return {std::llround(vcpus * 1000.0), ram_mib, disk_gib};
}

std::string ResourceVector::to_string() const {
  return fmt::format("{{vcpus: {}, ram_mib: {}, disk_gib: {}}}", vcpus(), ram_mib, disk_gib);
}

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view s, const std::array<Enum, N>& all) {
  const auto key = normalize(s);
  for (Enum e : all) {
    if (normalize(to_string(e)) == key) return e;
  }
  return std::nullopt;
}

bool is_identifier(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

}  // namespace

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::Cloud: return "Cloud";
    case Tier::EdgeCloudlet: return "EdgeCloudlet";
    case Tier::EdgeGateway: return "EdgeGateway";
    case Tier::SwarmOfThings: return "SwarmOfThings";
  }
  return "?";
}

std::string_view to_string(ComputeProfile p) {
  switch (p) {
    case ComputeProfile::GeneralPurpose: return "GeneralPurpose";
    case ComputeProfile::ComputeOptimized: return "ComputeOptimized";
    case ComputeProfile::MemoryOptimized: return "MemoryOptimized";
    case ComputeProfile::StorageOptimized: return "StorageOptimized";
  }
  return "?";
}

std::string_view to_string(NetworkProfile p) {
  switch (p) {
    case NetworkProfile::BestEffort: return "BestEffort";
    case NetworkProfile::InteractiveApplication: return "InteractiveApplication";
    case NetworkProfile::SignalingAndVideoStreaming: return "SignalingAndVideoStreaming";
    case NetworkProfile::InteractiveRealTimeVideo: return "InteractiveRealTimeVideo";
  }
  return "?";
}

std::optional<Tier> parse_tier(std::string_view s) {
  return parse_enum(s, std::array{Tier::Cloud, Tier::EdgeCloudlet, Tier::EdgeGateway,
                                  Tier::SwarmOfThings});
}

std::optional<ComputeProfile> parse_compute_profile(std::string_view s) {
  return parse_enum(s, std::array{ComputeProfile::GeneralPurpose, ComputeProfile::ComputeOptimized,
                                  ComputeProfile::MemoryOptimized,
                                  ComputeProfile::StorageOptimized});
}

std::optional<NetworkProfile> parse_network_profile(std::string_view s) {
  return parse_enum(s, kAllNetworkProfiles);
}

ProfileThresholds default_thresholds() {
  ProfileThresholds t;
  t[NetworkProfile::InteractiveApplication] = {Bandwidth::mbps(1), 100.0, std::nullopt};
  t[NetworkProfile::SignalingAndVideoStreaming] = {Bandwidth::mbps(4), 300.0, std::nullopt};
  t[NetworkProfile::InteractiveRealTimeVideo] = {Bandwidth::mbps(4), 50.0, 10.0};
  return t;
}

std::string describe(const Requirement& r) {
  return std::visit(
      [](const auto& req) -> std::string {
        using T = std::decay_t<decltype(req)>;
        if constexpr (std::is_same_v<T, ComputeRequirement>) {
          return fmt::format("Compute({}, {})", to_string(req.profile), req.request.to_string());
        } else if constexpr (std::is_same_v<T, NetworkRequirement>) {
          return fmt::format("Network({}, {})", to_string(req.profile), req.endpoint);
        } else if constexpr (std::is_same_v<T, LocationRequirement>) {
          return fmt::format("Location({})", req.region);
        } else {
          return fmt::format("AccessRights({})", req.label);
        }
      },
      r);
}

const ComputeRequirement* DeploymentRequest::compute() const {
  for (const auto& r : requirements)
    if (auto* c = std::get_if<ComputeRequirement>(&r)) return c;
  return nullptr;
}

const LocationRequirement* DeploymentRequest::location() const {
  for (const auto& r : requirements)
    if (auto* l = std::get_if<LocationRequirement>(&r)) return l;
  return nullptr;
}

std::vector<const NetworkRequirement*> DeploymentRequest::network() const {
  std::vector<const NetworkRequirement*> out;
  for (const auto& r : requirements)
    if (auto* n = std::get_if<NetworkRequirement>(&r)) out.push_back(n);
  return out;
}

std::vector<const AccessRightsRequirement*> DeploymentRequest::access_rights() const {
  std::vector<const AccessRightsRequirement*> out;
  for (const auto& r : requirements)
    if (auto* a = std::get_if<AccessRightsRequirement>(&r)) out.push_back(a);
  return out;
}

ValidationError::ValidationError(std::string f, std::string r, Kind k)
    : std::runtime_error(fmt::format("{}: {}", f, r)), field(std::move(f)), reason(std::move(r)),
      kind(k) {}

namespace {

// Small cursor over a JSON document that knows its own path for messages.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

  std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void require_object() const {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  std::string string(const std::string& key, std::optional<std::string> fallback = {}) const {
    if (!has(key) || j_.at(key).is_null()) {
      if (fallback) return *fallback;
      fail(child_path(key), "missing");
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(child_path(key), "expected a string");
    return v.get<std::string>();
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key) || j_.at(key).is_null()) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(child_path(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(child_path(key), "not finite");
    if (d < 0) fail(child_path(key), "negative");
    return d;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    if (!has(key) || j_.at(key).is_null()) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(child_path(key), "expected a number");
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d < 0) fail(child_path(key), "negative");
      if (d != std::floor(d)) fail(child_path(key), "expected an integer");
      return static_cast<std::int64_t>(d);
    }
    if (v.is_number_integer() && v.get<std::int64_t>() < 0) fail(child_path(key), "negative");
    return v.get<std::int64_t>();
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& reason,
                                ValidationError::Kind kind = ValidationError::Kind::Malformed) {
    throw ValidationError(field, reason, kind);
  }

 private:
  const json& j_;
  std::string path_;
};

PeerRef parse_peer(const Reader& r) {
  r.require_object();
  const bool ep = r.has("endpoint");
  const bool comp = r.has("component");
  if (ep == comp) Reader::fail(r.path(), "expected exactly one of endpoint/component");
  if (ep) return {PeerRef::Kind::Endpoint, r.string("endpoint")};
  return {PeerRef::Kind::Component, r.string("component")};
}

FlowSpec parse_flow(const Reader& r) {
  r.require_object();
  FlowSpec f;
  const bool from = r.has("from");
  const bool to = r.has("to");
  if (from == to) Reader::fail(r.path(), "expected exactly one of from/to");
  f.direction = from ? FlowSpec::Direction::Inbound : FlowSpec::Direction::Outbound;
  const std::string key = from ? "from" : "to";
  f.peer = parse_peer(Reader(r.value().at(key), r.child_path(key)));
  if (!r.has("rate_mbps")) Reader::fail(r.child_path("rate_mbps"), "missing");
  f.rate = Bandwidth::mbps(r.number("rate_mbps", 0.0));
  return f;
}

ApplicationComponent parse_component(const json& j, const std::string& path) {
  ApplicationComponent c;
  if (j.is_string()) {
    c.name = j.get<std::string>();
    c.image = c.name;
  } else {
    Reader r(j, path);
    r.require_object();
    c.name = r.string("name");
    c.image = r.string("image", c.name);
    if (r.has("flows")) {
      const auto& flows = j.at("flows");
      if (!flows.is_array()) Reader::fail(r.child_path("flows"), "expected a list");
      for (std::size_t i = 0; i < flows.size(); ++i)
        c.flows.push_back(parse_flow(Reader(flows[i], fmt::format("{}.flows[{}]", path, i))));
    }
  }
  if (!is_identifier(c.name)) Reader::fail(path + ".name", "not an identifier");
  return c;
}

Requirement parse_requirement(const json& j, const std::string& path) {
  if (!j.is_object() || j.size() != 1)
    Reader::fail(path, "expected a single-key object (compute/network/location/access_rights)");
  const auto& [kind, body] = *j.items().begin();
  Reader r(body, path + "." + kind);
  r.require_object();
  if (kind == "compute") {
    ComputeRequirement c;
    const auto profile = r.string("profile", std::string(to_string(ComputeProfile::GeneralPurpose)));
    const auto parsed = parse_compute_profile(profile);
    if (!parsed) Reader::fail(r.child_path("profile"), "unknown profile '" + profile + "'");
    c.profile = *parsed;
    c.request.millicores = std::llround(r.number("vcpus", 0.0) * 1000.0);
    c.request.ram_mib = r.integer("ram_mib", 0);
    c.request.disk_gib = r.integer("disk_gib", 0);
    return c;
  }
  if (kind == "network") {
    NetworkRequirement n;
    const auto profile = r.string("profile", std::string(to_string(NetworkProfile::BestEffort)));
    const auto parsed = parse_network_profile(profile);
    if (!parsed) Reader::fail(r.child_path("profile"), "unknown profile '" + profile + "'");
    n.profile = *parsed;
    n.endpoint = r.string("endpoint");
    return n;
  }
  if (kind == "location") return LocationRequirement{r.string("region")};
  if (kind == "access_rights") return AccessRightsRequirement{r.string("label")};
  Reader::fail(path, "unknown requirement kind '" + kind + "'");
}

}  // namespace

DeploymentRequest validate_request(const json& raw, const KnownReferences* refs) {
  Reader top(raw, "");
  top.require_object();
  DeploymentRequest req;
  req.id = top.string("id", "");
  req.tenant = top.string("tenant", "default");
  if (!top.has("component")) Reader::fail("component", "missing");
  req.component = parse_component(raw.at("component"), "component");
  req.submitted_at = Millis(top.integer("submitted_at_ms", 0));

  if (top.has("requirements") && !raw.at("requirements").is_null()) {
    const auto& reqs = raw.at("requirements");
    if (!reqs.is_array()) Reader::fail("requirements", "expected a list");
    for (std::size_t i = 0; i < reqs.size(); ++i)
      req.requirements.push_back(parse_requirement(reqs[i], fmt::format("requirements[{}]", i)));
  }

  int computes = 0, locations = 0;
  std::set<std::string> endpoints;
  for (std::size_t i = 0; i < req.requirements.size(); ++i) {
    const auto path = fmt::format("requirements[{}]", i);
    const auto& r = req.requirements[i];
    if (std::holds_alternative<ComputeRequirement>(r) && ++computes > 1)
      Reader::fail(path + ".compute", "duplicate compute requirement");
    if (std::holds_alternative<LocationRequirement>(r) && ++locations > 1)
      Reader::fail(path + ".location", "duplicate location requirement");
    if (const auto* n = std::get_if<NetworkRequirement>(&r)) {
      if (!endpoints.insert(n->endpoint).second)
        Reader::fail(path + ".network.endpoint", "duplicate endpoint '" + n->endpoint + "'");
      if (refs && !refs->endpoints.contains(n->endpoint))
        Reader::fail(path + ".network.endpoint", "unknown endpoint '" + n->endpoint + "'",
                     ValidationError::Kind::UnknownReference);
    }
    if (const auto* l = std::get_if<LocationRequirement>(&r)) {
      if (refs && !refs->regions.contains(l->region))
        Reader::fail(path + ".location.region", "unknown region '" + l->region + "'",
                     ValidationError::Kind::UnknownReference);
    }
  }
  for (std::size_t i = 0; i < req.component.flows.size(); ++i) {
    const auto& f = req.component.flows[i];
    if (refs && f.peer.kind == PeerRef::Kind::Endpoint && !refs->endpoints.contains(f.peer.id))
      Reader::fail(fmt::format("component.flows[{}]", i), "unknown endpoint '" + f.peer.id + "'",
                   ValidationError::Kind::UnknownReference);
    if (f.peer.kind == PeerRef::Kind::Component && f.peer.id == req.component.name)
      Reader::fail(fmt::format("component.flows[{}]", i), "flow targets its own component");
  }
  return req;
}

json to_json(const ResourceVector& v) {
  return {{"vcpus", v.vcpus()}, {"ram_mib", v.ram_mib}, {"disk_gib", v.disk_gib}};
}

ResourceVector resource_vector_from_json(const json& j) {
  return {std::llround(j.at("vcpus").get<double>() * 1000.0), j.at("ram_mib").get<std::int64_t>(),
          j.at("disk_gib").get<std::int64_t>()};
}

json to_json(const FlowSpec& f) {
  json peer = {{f.peer.kind == PeerRef::Kind::Endpoint ? "endpoint" : "component", f.peer.id}};
  return {{f.direction == FlowSpec::Direction::Inbound ? "from" : "to", peer},
          {"rate_mbps", f.rate.mbps()}};
}

FlowSpec flow_spec_from_json(const json& j) { return parse_flow(Reader(j, "flow")); }

json to_json(const DeploymentRequest& r) {
  json flows = json::array();
  for (const auto& f : r.component.flows) flows.push_back(to_json(f));
  json reqs = json::array();
  for (const auto& req : r.requirements) {
    std::visit(
        [&](const auto& q) {
          using T = std::decay_t<decltype(q)>;
          if constexpr (std::is_same_v<T, ComputeRequirement>) {
            json body = to_json(q.request);
            body["profile"] = to_string(q.profile);
            reqs.push_back({{"compute", body}});
          } else if constexpr (std::is_same_v<T, NetworkRequirement>) {
            reqs.push_back(
                {{"network", {{"profile", to_string(q.profile)}, {"endpoint", q.endpoint}}}});
          } else if constexpr (std::is_same_v<T, LocationRequirement>) {
            reqs.push_back({{"location", {{"region", q.region}}}});
          } else {
            reqs.push_back({{"access_rights", {{"label", q.label}}}});
          }
        },
        req);
  }
  return {{"id", r.id},
          {"tenant", r.tenant},
          {"component", {{"name", r.component.name}, {"image", r.component.image}, {"flows", flows}}},
          {"requirements", reqs},
          {"submitted_at_ms", r.submitted_at.count()}};
}

json to_json(const Placement& p) {
  json net = json::array();
  for (const auto& n : p.network_reservations)
    net.push_back({{"path", n.path}, {"bandwidth_kbps", n.bandwidth.kbps()}});
  return {{"request_id", p.request_id},
          {"tenant", p.tenant},
          {"component", p.component},
          {"node", p.node_id},
          {"allocated", to_json(p.allocated)},
          {"network", net},
          {"flows", [&] {
             json fs = json::array();
             for (const auto& f : p.flows) fs.push_back(to_json(f));
             return fs;
           }()},
          {"state", p.state == Placement::State::Running ? "Running" : "Evicted"}};
}

Placement placement_from_json(const json& j) {
  Placement p;
  p.request_id = j.at("request_id").get<std::string>();
  p.tenant = j.at("tenant").get<std::string>();
  p.component = j.at("component").get<std::string>();
  p.node_id = j.at("node").get<std::string>();
  p.allocated = resource_vector_from_json(j.at("allocated"));
  for (const auto& n : j.at("network"))
    p.network_reservations.push_back({n.at("path").get<std::vector<std::string>>(),
                                      Bandwidth::kbps(n.at("bandwidth_kbps").get<std::int64_t>())});
  for (const auto& f : j.value("flows", json::array())) p.flows.push_back(flow_spec_from_json(f));
  p.state = j.at("state").get<std::string>() == "Running" ? Placement::State::Running
                                                          : Placement::State::Evicted;
  return p;
}

}  // namespace foglet
