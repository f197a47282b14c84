#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bbrel {

/// Half-open [start, end) in seconds.
struct TimeInterval {
  double start = 0;
  double end = 0;
};

struct LinkModel {
  std::string name;
  double capacity_bps = 0;
  std::vector<TimeInterval> outages;  // disjoint, sorted

  bool up_at(double t) const;
  /// Throws std::invalid_argument for overlapping, unsorted or empty intervals.
  void validate() const;
};

struct FailoverPolicy {
  double detection_delay_s = 5;
  bool switchback = false;
  double switchback_delay_s = 0;
};

/// Capacity seen by the home network at time t. During a primary outage the
/// gateway delivers nothing until the outage is detected, then the secondary's
/// capacity (while the secondary itself is up). After recovery the secondary
/// is kept for `switchback_delay_s` when `switchback` is set.
double effective_capacity(double t, const LinkModel& primary, const LinkModel* secondary,
                          const FailoverPolicy& policy);

/// Integral of effective_capacity over [t0, t1], in bits.
double delivered_bits(double t0, double t1, const LinkModel& primary, const LinkModel* secondary,
                      const FailoverPolicy& policy);

struct Rung {
  std::string label;
  double bitrate_bps = 0;
};

/// 480p 1.5 Mbps, 720p 3 Mbps, 1080p 6 Mbps.
std::vector<Rung> default_ladder();

struct AbrParams {
  bool enabled = true;
  double resume_threshold_s = 5;
  double low_watermark_s = 10;
  double high_watermark_s = 30;
  double upswitch_headroom = 1.2;
};

struct StreamClient {
  double buffer_s = 0;
  double buffer_cap_s = 240;
  std::vector<Rung> ladder = default_ladder();
  std::size_t quality = 2;  // index into ladder
  bool stalled = false;
  AbrParams abr;

  double bitrate_bps() const { return ladder.at(quality).bitrate_bps; }
};

struct StepResult {
  double downloaded_s = 0;  // media seconds accepted into the buffer
  double played_s = 0;
  std::optional<double> stall_offset_s;  // time into the step at which playback stalled
  double stalled_s = 0;                   // time within the step spent stalled
};

/// Advances the fluid model by dt at a constant (average) capacity.
/// Throws std::invalid_argument for dt <= 0.
StepResult step_stream(StreamClient& client, double capacity_bps, double dt);

struct Scenario {
  LinkModel primary;
  std::optional<LinkModel> secondary;
  FailoverPolicy policy;
  StreamClient client;
  double duration_s = 600;
  double dt = 0.1;
};

Scenario scenario_from_json(const nlohmann::json& j);

struct TrajectorySample {
  double t = 0;
  double capacity_bps = 0;
  double buffer_s = 0;
  std::size_t quality = 0;
  bool stalled = false;
};

struct OnsetState {
  double onset_s = 0;
  double buffer_s = 0;  // at the start of the step containing the onset
};

struct TrajectorySummary {
  std::size_t stall_count = 0;
  double stall_seconds = 0;
  std::vector<double> stall_times;
  std::map<std::string, double> quality_seconds;  // playing time per rung
  std::vector<OnsetState> primary_onsets;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  TrajectorySummary summary;
};

/// Deterministic fixed-step run. Throws std::invalid_argument when dt does
/// not divide the duration.
Trajectory run_scenario(const Scenario& scenario);

nlohmann::json to_json(const TrajectorySummary& s, const std::vector<Rung>& ladder);

}  // namespace bbrel
