#include "foglet/config.hpp"

#include <cmath>
#include <stdexcept>

namespace foglet {

double TierPreference::operator()(Tier t) const {
  switch (t) {
    case Tier::Cloud: return cloud;
    case Tier::EdgeCloudlet: return edge_cloudlet;
    case Tier::EdgeGateway: return edge_gateway;
    case Tier::SwarmOfThings: return 0.0;
  }
  return 0.0;
}

namespace {

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const double v = j.at(key).get<double>();
  if (v < 0) throw std::invalid_argument(std::string(key) + " must be >= 0");
  return v;
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

EngineConfig load_config(const json& doc) {
  EngineConfig c;
  if (doc.is_null()) return c;
  if (!doc.is_object()) throw std::invalid_argument("config must be a mapping");

  if (doc.contains("thresholds")) {
    for (const auto& [name, row] : doc.at("thresholds").items()) {
      const auto profile = parse_network_profile(name);
      if (!profile) throw std::invalid_argument("unknown network profile " + name);
      ThresholdRow r;
      if (auto bw = optional_number(row, "min_bandwidth_mbps")) r.min_bandwidth = Bandwidth::mbps(*bw);
      r.max_latency_ms = optional_number(row, "max_latency_ms");
      r.max_jitter_ms = optional_number(row, "max_jitter_ms");
      if (*profile == NetworkProfile::BestEffort && (r.min_bandwidth || r.max_latency_ms || r.max_jitter_ms))
        throw std::invalid_argument("BestEffort carries no thresholds");
      c.scheduler.thresholds[*profile] = r;
    }
  }
  if (doc.contains("weights")) {
    const auto& w = doc.at("weights");
    auto& sw = c.scheduler.weights;
    sw.capacity_fit = optional_number(w, "capacity_fit").value_or(sw.capacity_fit);
    sw.network_slack = optional_number(w, "network_slack").value_or(sw.network_slack);
    sw.tier_preference = optional_number(w, "tier_preference").value_or(sw.tier_preference);
    if (std::abs(sw.capacity_fit + sw.network_slack + sw.tier_preference - 1.0) > 1e-9)
      throw std::invalid_argument("score weights must sum to 1");
  }
  if (doc.contains("tier_preference")) {
    const auto& t = doc.at("tier_preference");
    auto& tp = c.scheduler.tier_preference;
    tp.cloud = optional_number(t, "cloud").value_or(tp.cloud);
    tp.edge_cloudlet = optional_number(t, "edge_cloudlet").value_or(tp.edge_cloudlet);
    tp.edge_gateway = optional_number(t, "edge_gateway").value_or(tp.edge_gateway);
    for (double v : {tp.cloud, tp.edge_cloudlet, tp.edge_gateway})
      if (v > 1.0) throw std::invalid_argument("tier preference must lie in [0, 1]");
  }
  if (doc.contains("default_footprint")) {
    const auto& f = doc.at("default_footprint");
    c.scheduler.default_footprint =
        ResourceVector::of(optional_number(f, "vcpus").value_or(0.0),
                           static_cast<std::int64_t>(optional_number(f, "ram_mib").value_or(0.0)),
                           static_cast<std::int64_t>(optional_number(f, "disk_gib").value_or(0.0)));
  }
  if (auto ttl = optional_number(doc, "reservation_ttl_s"))
    c.reservation_ttl = Millis(std::llround(*ttl * 1000.0));
  if (auto m = optional_number(doc, "drain_multiplier")) c.drain_multiplier = *m;
  if (doc.contains("parallel_filter")) c.scheduler.parallel = doc.at("parallel_filter").get<bool>();
  if (auto n = optional_number(doc, "journal_snapshot_every"))
    c.journal_snapshot_every = static_cast<std::size_t>(*n);
  return c;
}

json to_json(const EngineConfig& c) {
  json thresholds = json::object();
  for (auto p : kAllNetworkProfiles) {
    const auto& row = c.scheduler.thresholds[p];
    thresholds[std::string(to_string(p))] = {
        {"min_bandwidth_mbps",
         row.min_bandwidth ? json(row.min_bandwidth->mbps()) : json(nullptr)},
        {"max_latency_ms", optional_to_json(row.max_latency_ms)},
        {"max_jitter_ms", optional_to_json(row.max_jitter_ms)}};
  }
  const auto& s = c.scheduler;
  return {{"thresholds", thresholds},
          {"weights",
           {{"capacity_fit", s.weights.capacity_fit},
            {"network_slack", s.weights.network_slack},
            {"tier_preference", s.weights.tier_preference}}},
          {"tier_preference",
           {{"cloud", s.tier_preference.cloud},
            {"edge_cloudlet", s.tier_preference.edge_cloudlet},
            {"edge_gateway", s.tier_preference.edge_gateway}}},
          {"default_footprint", to_json(s.default_footprint)},
          {"reservation_ttl_s", static_cast<double>(c.reservation_ttl.count()) / 1000.0},
          {"drain_multiplier", c.drain_multiplier},
          {"parallel_filter", s.parallel},
          {"journal_snapshot_every", c.journal_snapshot_every}};
}

}  // namespace foglet
