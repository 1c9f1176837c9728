#pragma once

#include <filesystem>
#include <optional>

#include "foglet/model.hpp"

namespace foglet {

struct ScoreWeights {
  double capacity_fit = 0.4;
  double network_slack = 0.3;
  double tier_preference = 0.3;
};

struct TierPreference {
  double cloud = 1.0;
  double edge_cloudlet = 0.6;
  double edge_gateway = 0.3;

  double operator()(Tier t) const;
};

struct SchedulerConfig {
  ProfileThresholds thresholds = default_thresholds();
  ScoreWeights weights;
  TierPreference tier_preference;
  // Reserved for requests that carry no Compute requirement.
  ResourceVector default_footprint = ResourceVector::of(0.5, 512, 1);
  // Evaluate candidate nodes with OpenMP.
  bool parallel = false;
};

struct EngineConfig {
  SchedulerConfig scheduler;
  Millis reservation_ttl{30'000};
  double drain_multiplier = 2.0;
  std::size_t journal_snapshot_every = 64;
};

// Overlays the keys present in `doc` onto the defaults:
//   thresholds: {<profile>: {min_bandwidth_mbps, max_latency_ms, max_jitter_ms}}
//   weights: {capacity_fit, network_slack, tier_preference}
//   tier_preference: {cloud, edge_cloudlet, edge_gateway}
//   default_footprint: {vcpus, ram_mib, disk_gib}
//   reservation_ttl_s, drain_multiplier, parallel_filter, journal_snapshot_every
// Throws std::invalid_argument on bad values (weights must be >= 0 and sum to 1).
EngineConfig load_config(const json& doc);
json to_json(const EngineConfig& c);

}  // namespace foglet
