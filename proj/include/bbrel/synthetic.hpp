#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bbrel/core_model.hpp"
#include "json.hpp"

namespace bbrel {

/// Per-unit hourly loss process: each hour is lossy with probability
/// `p_lossy_hour`, with its loss rate drawn uniformly from [loss_min, loss_max].
struct LossProfile {
  std::string name;
  double weight = 1;
  double p_lossy_hour = 0;
  double loss_min = 0;
  double loss_max = 0;
};

struct IspProfile {
  std::string name;
  Technology technology = Technology::Cable;
  double weight = 1;
  std::vector<std::pair<std::int64_t, std::int64_t>> tiers_kbps;  // (down, up)
};

struct RegionProfile {
  std::string name;
  std::string timezone;
};

/// Forces `duration` hours starting at `start_hour` (offset from the trace
/// start) of one unit to exactly `loss_rate` on every target.
struct OutageInjection {
  std::size_t unit_index = 0;
  std::int64_t start_hour = 0;
  std::int64_t duration = 1;
  double loss_rate = 1.0;
};

struct SynthSpec {
  int units = 60;
  std::int64_t hours = 24 * 28;
  Hour start = parse_hour("2015-01-01T00:00:00Z");
  std::uint64_t seed = 1;

  int targets = 2;
  std::int64_t probes_per_target = 600;
  double p_missing_hour = 0.01;

  std::vector<IspProfile> isps;
  std::vector<RegionProfile> regions;
  int blocks_per_region = 3;
  std::vector<LossProfile> loss_profiles;
  std::vector<OutageInjection> outages;

  double mean_bytes_per_hour = 4e8;
  double loss_sensitivity = 0.4;
  std::int64_t test_bytes_per_hour = 2'000'000;

  std::int64_t dns_queries_per_server = 4;
  double p_dns_single_failure = 0.002;
  double p_dns_double_failure = 0.001;

  bool emit_traffic = true;
  bool emit_dns = true;

  /// Spec with the default ISP, region and loss-profile mix filled in.
  static SynthSpec defaults();
};

/// Unknown keys are rejected; absent keys keep their defaults.
SynthSpec synth_spec_from_json(const nlohmann::json& j);

struct SynthOutput {
  std::vector<UnitMeta> units;
  std::vector<PingHourRaw> pings;
  std::vector<TrafficHourRaw> traffic;
  std::vector<DnsHourRaw> dns;
  std::vector<HourlyRecord> hourly;
};

/// Deterministic in the spec (including seed). Throws std::invalid_argument
/// for hours <= 0 or units <= 0.
SynthOutput generate_synthetic(const SynthSpec& spec);

/// Writes units.csv, pings.csv and, when present, traffic.csv and dns.csv.
std::vector<std::filesystem::path> write_synthetic(const SynthOutput& out, const std::filesystem::path& dir);

}  // namespace bbrel
