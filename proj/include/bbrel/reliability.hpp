#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbrel/core_model.hpp"
#include "bbrel/rational.hpp"

namespace bbrel {

inline constexpr std::int64_t kHoursPerYear = 8760;

/// Default failure thresholds on hourly loss rate.
inline const std::vector<double> kDefaultThresholds{0.01, 0.05, 0.10};

/// Carries a short machine-readable code ("empty-scope", "no-timezone", ...).
class ReliabilityError : public std::runtime_error {
 public:
  ReliabilityError(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct FailureEvent {
  std::string unit_id;
  Hour start_hour;
  std::int64_t duration = 0;  // whole hours
  double threshold = 0;
  double max_loss = 0;

  friend bool operator==(const FailureEvent&, const FailureEvent&) = default;
};

/// Maximal runs of consecutive observed hours with loss >= threshold.
/// A missing hour ends a run. Throws std::invalid_argument when the series is
/// unsorted or the threshold is outside (0, 1].
std::vector<FailureEvent> classify_failures(std::string_view unit_id, std::span<const LossSample> series,
                                            double threshold);

struct ReliabilityStats {
  std::string scope;
  double threshold = 0;
  std::int64_t uptime_hours = 0;
  std::int64_t downtime_hours = 0;
  std::int64_t failures = 0;
  std::optional<Rational> mtbf_hours;
  std::optional<Rational> mdt_hours;
  Rational availability{1};
  Rational unavailability{0};

  Rational annual_downtime_hours() const { return unavailability * kHoursPerYear; }
};

/// Throws ReliabilityError("empty-scope") when the series has no hours.
ReliabilityStats compute_stats(std::span<const LossSample> series, double threshold, std::string scope = {});

/// Group view: availability is the mean of member availabilities; uptime,
/// downtime, failures, MTBF and MDT are pooled over members.
struct GroupStats {
  std::string scope;
  double threshold = 0;
  std::size_t members = 0;
  Rational mean_availability{1};
  ReliabilityStats pooled;

  Rational mean_unavailability() const { return 1 - mean_availability; }
  Rational annual_downtime_hours() const { return mean_unavailability() * kHoursPerYear; }
};

/// Throws std::invalid_argument for an empty member list.
GroupStats aggregate_stats(std::string scope, std::span<const ReliabilityStats> members);

enum class GroupKey { Unit, Isp, Technology, Tier, Year, Region };

std::optional<GroupKey> parse_group_key(std::string_view s);
std::string_view to_string(GroupKey k);

/// A member of a group: a unit, or a unit-year for GroupKey::Year.
struct GroupMember {
  std::string group;
  std::string member_id;
  LossSeries series;
};

/// Units without metadata are skipped. Output ordered by (group, member_id).
std::vector<GroupMember> split_by_group(const std::map<std::string, LossSeries>& series,
                                        std::span<const UnitMeta> units, GroupKey key);

/// Local-time window [start_hour, end_hour).
struct PeakWindow {
  int start_hour = 19;
  int end_hour = 23;
};

/// Hours whose local start falls in the window. Throws
/// ReliabilityError("no-timezone") when the unit has no usable timezone.
LossSeries peak_hour_filter(std::span<const LossSample> series, const UnitMeta& unit, PeakWindow window = {});
LossSeries peak_hour_filter(std::span<const LossSample> series, const TimeZone& tz, PeakWindow window = {});

struct AggregateOptions {
  GroupKey key = GroupKey::Isp;
  std::vector<double> thresholds = kDefaultThresholds;
  bool peak_only = false;
  PeakWindow peak_window;
  int jobs = 1;
};

/// Per-group stats for every threshold, ordered by (scope, threshold).
/// Members excluded from peak analysis, or with no hours in scope, are
/// reported through `warnings`.
std::vector<GroupStats> aggregate_by(const std::map<std::string, LossSeries>& series, std::span<const UnitMeta> units,
                                     const AggregateOptions& options, std::vector<std::string>* warnings = nullptr);

// --- fine-grained probes ----------------------------------------------------

struct ProbeOutcome {
  double t_s = 0;
  bool answered = false;
};

struct ProbeRtt {
  double t_s = 0;
  std::optional<double> rtt_s;  // absent: no reply
};

/// A probe counts as answered iff its reply arrived within `timeout_s`.
std::vector<ProbeOutcome> probes_from_rtts(std::span<const ProbeRtt> probes, double timeout_s);

/// Fraction of consecutive windows (aligned to the first probe) whose loss
/// fraction is below `threshold`. Windows without probes are not counted.
/// Throws std::invalid_argument when window_s < cadence_s or no probes.
Rational windowed_availability(std::span<const ProbeOutcome> probes, double cadence_s, double window_s,
                               double threshold);

// --- loss distributions -----------------------------------------------------

struct CdfPoint {
  double loss = 0;
  double cum_fraction = 0;
};

struct LossCdf {
  std::string group;
  std::size_t hours = 0;
  std::vector<CdfPoint> points;  // one per distinct loss value, ascending
  std::vector<std::pair<double, Rational>> at_or_above;  // per threshold
};

/// Throws std::invalid_argument on an empty sample.
LossCdf loss_cdf(std::string group, std::span<const double> losses, std::span<const double> thresholds);

std::vector<LossCdf> loss_cdf_by(const std::map<std::string, LossSeries>& series, std::span<const UnitMeta> units,
                                 GroupKey key, std::span<const double> thresholds);

// --- failure localization ---------------------------------------------------

struct TraceHop {
  int hop_index = 0;
  bool responded = false;
  std::optional<IpAddress> address;
};

struct TraceObservation {
  std::string unit_id;
  std::chrono::sys_seconds timestamp;
  std::vector<TraceHop> hops;
  std::optional<IpAddress> gateway_address;
  std::vector<IpPrefix> provider_prefixes;
  bool destination_reached = false;
};

enum class ReachabilityClass { ReachedLanGateway, ReachedProviderNetwork, LeftProviderNetwork };

std::string_view to_string(ReachabilityClass c);

/// Farthest point a failed traceroute reached. The gateway is the hop with
/// `gateway_address`, or the first hop when that is unknown.
/// Errors: "not-a-failure" when the destination was reached, "no-response"
/// when no hop answered.
ReachabilityClass classify_reachability(const TraceObservation& obs);

}  // namespace bbrel
