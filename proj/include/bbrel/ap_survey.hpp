#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bbrel/core_model.hpp"
#include "json.hpp"

namespace bbrel {

struct MacAddress {
  std::uint64_t value = 0;  // low 48 bits

  /// "AA:BB:CC:DD:EE:FF", "aa-bb-cc-dd-ee-ff" or 12 bare hex digits.
  static std::optional<MacAddress> parse(std::string_view text);
  std::string to_string() const;  // upper-case, colon separated

  friend auto operator<=>(const MacAddress&, const MacAddress&) = default;
};

/// Positions at which the fixed 12-digit hex renderings differ.
int hex_digit_difference(MacAddress a, MacAddress b);

/// Same physical device: at most `max_digits` differing hex digits, or
/// differing only in the 24 least significant bits.
bool likely_same_device(MacAddress a, MacAddress b, int max_digits = 4);

struct ScanEntry {
  std::string ssid;
  MacAddress bssid;
  double signal_pct = 0;
};

struct ApScan {
  std::string client_id;
  std::string timestamp;
  std::vector<ScanEntry> entries;
  MacAddress current_bssid;
  double current_signal_pct = 0;
};

struct ApGroup {
  std::size_t group_id = 0;
  std::set<MacAddress> member_bssids;
  std::set<std::string> ssids;
  std::optional<std::string> inferred_isp;
  double max_signal_pct = 0;
};

inline const std::vector<std::string> kDefaultSsidBlocklist{"HP-Print", "Chromecast", "EXT", "almond"};

/// Drops entries whose SSID contains a blocklisted substring (case-insensitive).
std::vector<ScanEntry> filter_non_gateways(std::span<const ScanEntry> entries,
                                           std::span<const std::string> blocklist = kDefaultSsidBlocklist);

/// Transitive closure of likely_same_device over the distinct BSSIDs.
/// Groups are ordered by smallest member; ids count from 0 in that order.
std::vector<ApGroup> group_bssids(std::span<const ScanEntry> entries);

/// `pattern` is a case-insensitive glob ('*', '?') matched against whole
/// SSIDs. With `requires_other_ssids`, the group must also advertise some
/// SSID that does not match.
struct IspRule {
  std::string pattern;
  std::string isp;
  bool requires_other_ssids = false;
};

std::vector<IspRule> default_isp_rules();

/// Lines "pattern,isp[,with-others]"; '#' starts a comment.
std::vector<IspRule> read_isp_rules(std::istream& in);

bool glob_match_icase(std::string_view pattern, std::string_view text);

/// First rule (in order) matched by any of the group's SSIDs.
std::optional<std::string> infer_isp(const ApGroup& group, std::span<const IspRule> rules);

struct ScanReportOptions {
  std::vector<std::string> blocklist = kDefaultSsidBlocklist;
  std::vector<IspRule> rules = default_isp_rules();
  double viability_cutoff_pct = 40;
};

struct ScanReport {
  std::size_t scans = 0;
  double frac_one_or_more_alt = 0;
  double frac_two_or_more_alt = 0;
  std::vector<double> strongest_alt_signal;  // one per scan with an alternative
  std::vector<double> current_signal;        // one per scan
  double frac_viable_alt = 0;                // strongest alt >= cutoff, over all scans
  double frac_viable_among_with_alt = 0;
  double frac_inferred_isp_alt = 0;
  std::size_t inferred_alt_aps = 0;          // with a known client ISP
  double frac_different_isp_among_inferred = 0;
  std::map<std::size_t, std::size_t> alt_count_histogram;
  std::size_t near_threshold_pairs = 0;      // BSSIDs in different groups differing in exactly 5 digits
  std::size_t dropped_entries = 0;

  nlohmann::json to_json() const;
};

/// "Additional" APs exclude the group containing the scan's current BSSID.
/// Throws std::invalid_argument for an empty scan list.
ScanReport scan_report(std::span<const ApScan> scans, const std::map<std::string, std::string>& client_isp,
                       const ScanReportOptions& options = {});

/// scans.csv: client_id,timestamp,bssid,ssid,signal_pct,is_current. Rows
/// with malformed MACs or signals are dropped into `report`.
std::vector<ApScan> read_scans_csv(std::istream& in, const std::string& file, IngestReport& report);

/// clients.csv: client_id,isp
std::map<std::string, std::string> read_clients_csv(std::istream& in, const std::string& file, IngestReport& report);

}  // namespace bbrel
