#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bbrel/net_address.hpp"
#include "bbrel/time.hpp"

namespace bbrel {

enum class Technology { Fiber, Cable, CableBusiness, DSL, Satellite, Wireless };

std::string_view to_string(Technology t);
std::optional<Technology> parse_technology(std::string_view s);

struct UnitMeta {
  std::string unit_id;
  std::string isp;
  Technology technology = Technology::Cable;
  std::int64_t down_capacity_bps = 0;
  std::int64_t up_capacity_bps = 0;
  std::string region;
  std::string block_group;
  std::string timezone;
  bool active = true;

  /// Service tier label, "<down>/<up>" in Mbps.
  std::string tier() const;

  friend bool operator==(const UnitMeta&, const UnitMeta&) = default;
};

struct UnitHourKey {
  std::string unit_id;
  Hour hour;

  friend auto operator<=>(const UnitHourKey&, const UnitHourKey&) = default;
  friend bool operator==(const UnitHourKey&, const UnitHourKey&) = default;
};

struct RttSummary {
  double min_us = 0;
  double mean_us = 0;
  double max_us = 0;
  friend bool operator==(const RttSummary&, const RttSummary&) = default;
};

struct PingHourRaw {
  std::string unit_id;
  Hour hour_start;
  std::string target;
  std::int64_t probes_sent = 0;
  std::int64_t probes_lost = 0;
  std::optional<RttSummary> rtt;
  std::size_t line = 0;  // source line, 0 when not read from a file
};

struct TrafficHourRaw {
  std::string unit_id;
  Hour hour_start;
  std::int64_t bytes_down_total = 0;
  std::int64_t bytes_up_total = 0;
  std::int64_t bytes_down_test = 0;
  std::int64_t bytes_up_test = 0;
  std::size_t line = 0;
};

enum class DnsRole { Primary, Secondary };

struct DnsHourRaw {
  std::string unit_id;
  Hour hour_start;
  DnsRole role = DnsRole::Primary;
  std::int64_t queries = 0;
  std::int64_t failures = 0;
  std::size_t line = 0;
};

struct Traffic {
  std::uint64_t bytes_down = 0;
  std::uint64_t bytes_up = 0;
  std::uint64_t total() const { return bytes_down + bytes_up; }
  friend bool operator==(const Traffic&, const Traffic&) = default;
};

struct DnsCounts {
  std::int64_t queries = 0;
  std::int64_t failures = 0;
  friend bool operator==(const DnsCounts&, const DnsCounts&) = default;
};

struct DnsServerPair {
  std::optional<DnsCounts> primary;
  std::optional<DnsCounts> secondary;
  friend bool operator==(const DnsServerPair&, const DnsServerPair&) = default;
};

using LossMap = std::map<UnitHourKey, double>;
using TrafficMap = std::map<UnitHourKey, Traffic>;
using DnsMap = std::map<UnitHourKey, DnsServerPair>;

/// One observed gateway-hour. Traffic is absent when no counters were reported.
struct HourlyRecord {
  std::string unit_id;
  Hour hour_start;
  double loss_rate = 0;
  std::optional<Traffic> traffic;
  std::int64_t dns_queries = 0;
  std::int64_t dns_failures = 0;
  std::optional<bool> dns_primary_failed;
  std::optional<bool> dns_secondary_failed;

  friend bool operator==(const HourlyRecord&, const HourlyRecord&) = default;
};

struct LossSample {
  Hour hour;
  double loss_rate = 0;
  friend bool operator==(const LossSample&, const LossSample&) = default;
};

using LossSeries = std::vector<LossSample>;

struct IngestIssue {
  std::string file;
  std::size_t line = 0;
  std::string severity;  // "rejected" or "flagged"
  std::string reason;
  std::string detail;
};

struct IngestReport {
  std::vector<IngestIssue> issues;

  void reject(std::string file, std::size_t line, std::string reason, std::string detail = {});
  void flag(std::string file, std::size_t line, std::string reason, std::string detail = {});
  std::size_t count(std::string_view severity) const;

  /// One JSON object per line, keys sorted.
  void write_jsonl(std::ostream& out) const;
};

/// Per unit-hour minimum loss rate across targets. Rows violating the
/// PingHourRaw invariants are rejected into the report.
LossMap ingest_pings(std::span<const PingHourRaw> rows, IngestReport& report,
                     std::string_view file = "pings.csv");

/// Traffic with the active-test volume removed, clamped at zero.
TrafficMap ingest_traffic(std::span<const TrafficHourRaw> rows, IngestReport& report,
                          std::string_view file = "traffic.csv");

DnsMap ingest_dns(std::span<const DnsHourRaw> rows, IngestReport& report, std::string_view file = "dns.csv");

/// Joins the per-source maps. Only hours with a loss measurement are emitted.
std::vector<HourlyRecord> assemble_hourly(const LossMap& loss, const TrafficMap& traffic, const DnsMap& dns);

/// Series per unit, sorted by hour.
std::map<std::string, LossSeries> series_by_unit(const LossMap& loss);

namespace reject_reason {
inline constexpr std::string_view kNoMeta = "no-meta";
inline constexpr std::string_view kIspMismatch = "isp-mismatch";
inline constexpr std::string_view kFlagged = "flagged";
}  // namespace reject_reason

struct UnitRejection {
  std::string unit_id;
  std::string reason;
  friend bool operator==(const UnitRejection&, const UnitRejection&) = default;
};

struct UnitValidation {
  std::vector<UnitMeta> accepted;
  std::vector<UnitRejection> rejected;
};

using ResolverConfig = std::map<std::string, std::vector<IpAddress>>;
using IspPrefixes = std::map<std::string, std::vector<IpPrefix>>;

/// Drops inactive units and, when prefixes are supplied, units whose
/// configured resolvers are not all inside their claimed ISP's prefixes.
/// Observed unit ids without metadata are rejected as "no-meta".
/// Units with no resolver entry, or an ISP with no prefix entry, pass the ISP check.
UnitValidation validate_units(std::span<const UnitMeta> meta, const std::set<std::string>& observed_units,
                              const ResolverConfig* resolvers, const IspPrefixes* isp_prefixes);

// --- delimited text I/O ---------------------------------------------------

std::vector<PingHourRaw> read_pings_csv(std::istream& in, const std::string& file, IngestReport& report);
std::vector<TrafficHourRaw> read_traffic_csv(std::istream& in, const std::string& file, IngestReport& report);
std::vector<DnsHourRaw> read_dns_csv(std::istream& in, const std::string& file, IngestReport& report);
std::vector<UnitMeta> read_units_csv(std::istream& in, const std::string& file, IngestReport& report);
ResolverConfig read_resolvers_csv(std::istream& in, const std::string& file, IngestReport& report);
IspPrefixes read_isp_prefixes_csv(std::istream& in, const std::string& file, IngestReport& report);

void write_pings_csv(std::ostream& out, std::span<const PingHourRaw> rows);
void write_traffic_csv(std::ostream& out, std::span<const TrafficHourRaw> rows);
void write_dns_csv(std::ostream& out, std::span<const DnsHourRaw> rows);
void write_units_csv(std::ostream& out, std::span<const UnitMeta> units);
void write_hourly_csv(std::ostream& out, std::span<const HourlyRecord> records);

/// A cleaned dataset loaded from a directory holding units.csv and pings.csv
/// (required) plus traffic.csv, dns.csv, resolvers.csv, isp_prefixes.csv.
struct Dataset {
  std::vector<UnitMeta> units;  // accepted units only, sorted by unit_id
  std::vector<UnitRejection> rejected_units;
  LossMap loss;
  TrafficMap traffic;
  DnsMap dns;
  IngestReport report;
  std::vector<std::filesystem::path> inputs;

  const UnitMeta* find_unit(std::string_view unit_id) const;
  std::map<std::string, LossSeries> series() const;
  std::vector<HourlyRecord> hourly() const;
};

struct LoadOptions {
  /// nullopt: validate ISPs only when isp_prefixes.csv is present.
  std::optional<bool> validate_isp;
};

/// Throws CsvError naming the file (and column) when a required input is missing.
Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options = {});

}  // namespace bbrel
