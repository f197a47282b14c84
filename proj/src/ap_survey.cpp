#include "bbrel/ap_survey.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

#include "bbrel/csv.hpp"

namespace bbrel {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
  std::string digits;
  for (char c : trim(text)) {
    if (c == ':' || c == '-' || c == '.') continue;
    if (!std::isxdigit(static_cast<unsigned char>(c))) return std::nullopt;
    digits.push_back(c);
  }
  if (digits.size() != 12) return std::nullopt;
  return MacAddress{std::stoull(digits, nullptr, 16)};
}

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02X:%02X:%02X:%02X:%02X:%02X", static_cast<unsigned>((value >> 40) & 0xFF),
                static_cast<unsigned>((value >> 32) & 0xFF), static_cast<unsigned>((value >> 24) & 0xFF),
                static_cast<unsigned>((value >> 16) & 0xFF), static_cast<unsigned>((value >> 8) & 0xFF),
                static_cast<unsigned>(value & 0xFF));
  return buf;
}

int hex_digit_difference(MacAddress a, MacAddress b) {
  int n = 0;
  for (int i = 0; i < 12; ++i) {
    if (((a.value >> (4 * i)) & 0xF) != ((b.value >> (4 * i)) & 0xF)) ++n;
  }
  return n;
}

bool likely_same_device(MacAddress a, MacAddress b, int max_digits) {
  return hex_digit_difference(a, b) <= max_digits || (a.value >> 24) == (b.value >> 24);
}

std::vector<ScanEntry> filter_non_gateways(std::span<const ScanEntry> entries, std::span<const std::string> blocklist) {
  std::vector<std::string> needles;
  for (const auto& b : blocklist) needles.push_back(lower(b));
  std::vector<ScanEntry> out;
  for (const auto& e : entries) {
    auto ssid = lower(e.ssid);
    bool blocked = std::any_of(needles.begin(), needles.end(),
                               [&](const std::string& n) { return !n.empty() && ssid.find(n) != std::string::npos; });
    if (!blocked) out.push_back(e);
  }
  return out;
}

std::vector<ApGroup> group_bssids(std::span<const ScanEntry> entries) {
  std::vector<MacAddress> macs;
  for (const auto& e : entries) macs.push_back(e.bssid);
  std::sort(macs.begin(), macs.end());
  macs.erase(std::unique(macs.begin(), macs.end()), macs.end());

  DisjointSets sets(macs.size());
  for (std::size_t i = 0; i < macs.size(); ++i) {
    for (std::size_t j = i + 1; j < macs.size(); ++j) {
      if (likely_same_device(macs[i], macs[j])) sets.unite(i, j);
    }
  }
  // Roots are the smallest index of each set, so root order = smallest-member order.
  std::map<std::size_t, ApGroup> by_root;
  for (std::size_t i = 0; i < macs.size(); ++i) by_root[sets.find(i)].member_bssids.insert(macs[i]);
  for (const auto& e : entries) {
    auto idx = static_cast<std::size_t>(std::lower_bound(macs.begin(), macs.end(), e.bssid) - macs.begin());
    auto& g = by_root[sets.find(idx)];
    g.ssids.insert(e.ssid);
    g.max_signal_pct = std::max(g.max_signal_pct, e.signal_pct);
  }
  std::vector<ApGroup> out;
  for (auto& [_, g] : by_root) {
    g.group_id = out.size();
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<IspRule> default_isp_rules() {
  return {
      {"ATT*", "AT&T", false},
      {"2WIRE*", "AT&T", false},
      {"CenturyLink*", "CenturyLink", false},
      {"xfinitywifi", "Comcast", true},
      {"XFINITY*", "Comcast", false},
      {"FiOS-*", "Verizon", false},
      {"Verizon*", "Verizon", false},
      {"MySpectrumWiFi*", "Charter", false},
      {"SpectrumWiFi*", "Charter", false},
      {"TWCWiFi*", "TimeWarner", false},
      {"Optimum*", "Cablevision", false},
      {"CoxWiFi*", "Cox", false},
      {"Frontier*", "Frontier", false},
      {"Windstream*", "Windstream", false},
  };
}

std::vector<IspRule> read_isp_rules(std::istream& in) {
  std::vector<IspRule> rules;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_csv_line(t);
    if (fields.size() < 2) throw std::invalid_argument("isp rule needs pattern,isp: " + t);
    IspRule r{trim(fields[0]), trim(fields[1]), false};
    if (fields.size() >= 3) {
      auto flag = lower(trim(fields[2]));
      if (flag == "with-others") {
        r.requires_other_ssids = true;
      } else if (!flag.empty()) {
        throw std::invalid_argument("unknown isp rule flag: " + flag);
      }
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

bool glob_match_icase(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  auto eq = [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
  };
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || (pattern[p] != '*' && eq(pattern[p], text[t])))) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::optional<std::string> infer_isp(const ApGroup& group, std::span<const IspRule> rules) {
  // Each SSID belongs to the first rule whose pattern matches it, so a
  // public-hotspot name is never picked up again by a broader later rule.
  std::vector<std::size_t> owner;
  for (const auto& ssid : group.ssids) {
    std::size_t i = 0;
    while (i < rules.size() && !glob_match_icase(rules[i].pattern, ssid)) ++i;
    owner.push_back(i);
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    bool hit = false, other = false;
    for (std::size_t o : owner) (o == i ? hit : other) = true;
    if (hit && (!rules[i].requires_other_ssids || other)) return rules[i].isp;
  }
  return std::nullopt;
}

ScanReport scan_report(std::span<const ApScan> scans, const std::map<std::string, std::string>& client_isp,
                       const ScanReportOptions& options) {
  if (scans.empty()) throw std::invalid_argument("scan report needs at least one scan");
  ScanReport r;
  r.scans = scans.size();
  std::size_t one = 0, two = 0, viable = 0, inferred_scans = 0, different = 0;
  for (const auto& scan : scans) {
    auto kept = filter_non_gateways(scan.entries, options.blocklist);
    r.dropped_entries += scan.entries.size() - kept.size();
    auto groups = group_bssids(kept);
    std::vector<ApGroup*> alts;
    for (auto& g : groups) {
      if (!g.member_bssids.contains(scan.current_bssid)) alts.push_back(&g);
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        for (auto a : groups[i].member_bssids) {
          for (auto b : groups[j].member_bssids) {
            if (hex_digit_difference(a, b) == 5) ++r.near_threshold_pairs;
          }
        }
      }
    }
    ++r.alt_count_histogram[alts.size()];
    r.current_signal.push_back(scan.current_signal_pct);
    if (alts.size() >= 1) ++one;
    if (alts.size() >= 2) ++two;
    if (!alts.empty()) {
      double best = 0;
      for (auto* g : alts) best = std::max(best, g->max_signal_pct);
      r.strongest_alt_signal.push_back(best);
      if (best >= options.viability_cutoff_pct) ++viable;
    }
    auto client = client_isp.find(scan.client_id);
    bool any_inferred = false;
    for (auto* g : alts) {
      g->inferred_isp = infer_isp(*g, options.rules);
      if (!g->inferred_isp) continue;
      any_inferred = true;
      if (client != client_isp.end()) {
        ++r.inferred_alt_aps;
        if (lower(*g->inferred_isp) != lower(client->second)) ++different;
      }
    }
    if (any_inferred) ++inferred_scans;
  }
  auto n = static_cast<double>(scans.size());
  r.frac_one_or_more_alt = static_cast<double>(one) / n;
  r.frac_two_or_more_alt = static_cast<double>(two) / n;
  r.frac_viable_alt = static_cast<double>(viable) / n;
  r.frac_viable_among_with_alt = one ? static_cast<double>(viable) / static_cast<double>(one) : 0.0;
  r.frac_inferred_isp_alt = static_cast<double>(inferred_scans) / n;
  r.frac_different_isp_among_inferred =
      r.inferred_alt_aps ? static_cast<double>(different) / static_cast<double>(r.inferred_alt_aps) : 0.0;
  return r;
}

nlohmann::json ScanReport::to_json() const {
  nlohmann::json j;
  j["scans"] = scans;
  j["frac_one_or_more_alt"] = frac_one_or_more_alt;
  j["frac_two_or_more_alt"] = frac_two_or_more_alt;
  j["frac_viable_alt"] = frac_viable_alt;
  j["frac_viable_among_with_alt"] = frac_viable_among_with_alt;
  j["frac_inferred_isp_alt"] = frac_inferred_isp_alt;
  j["inferred_alt_aps"] = inferred_alt_aps;
  j["frac_different_isp_among_inferred"] = frac_different_isp_among_inferred;
  j["near_threshold_pairs"] = near_threshold_pairs;
  j["dropped_entries"] = dropped_entries;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : alt_count_histogram) hist[std::to_string(k)] = v;
  j["alt_count_histogram"] = hist;
  // Deciles of the strongest-alternative signal distribution.
  nlohmann::json deciles = nlohmann::json::object();
  std::vector<std::size_t> bins(10, 0);
  for (double s : strongest_alt_signal) bins[std::min<std::size_t>(9, static_cast<std::size_t>(s / 10))]++;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    char key[16];
    std::snprintf(key, sizeof key, "%03zu-%03zu", i * 10, i * 10 + 10);
    deciles[key] = bins[i];
  }
  j["strongest_alt_signal_histogram"] = deciles;
  return j;
}

std::vector<ApScan> read_scans_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"client_id", "timestamp", "bssid", "ssid", "signal_pct", "is_current"});
  std::map<std::pair<std::string, std::string>, ApScan> scans;
  CsvRow row;
  while (reader.next(row)) {
    try {
      auto client = trim(row.str("client_id"));
      auto ts = trim(row.str("timestamp"));
      auto mac = MacAddress::parse(row.str("bssid"));
      if (!mac) {
        report.reject(file, row.line(), "malformed-mac", std::string(row.str("bssid")));
        continue;
      }
      double signal = row.real("signal_pct");
      if (signal < 0 || signal > 100) throw std::invalid_argument("signal_pct out of range");
      auto& scan = scans[{client, ts}];
      scan.client_id = client;
      scan.timestamp = ts;
      ScanEntry e{std::string(row.str("ssid")), *mac, signal};
      if (row.boolean("is_current")) {
        scan.current_bssid = *mac;
        scan.current_signal_pct = signal;
      }
      scan.entries.push_back(std::move(e));
    } catch (const std::exception& e) {
      report.reject(file, row.line(), "malformed", e.what());
    }
  }
  std::vector<ApScan> out;
  for (auto& [_, s] : scans) out.push_back(std::move(s));
  return out;
}

std::map<std::string, std::string> read_clients_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"client_id", "isp"});
  std::map<std::string, std::string> out;
  CsvRow row;
  while (reader.next(row)) {
    try {
      out[trim(row.str("client_id"))] = trim(row.str("isp"));
    } catch (const std::exception& e) {
      report.reject(file, row.line(), "malformed", e.what());
    }
  }
  return out;
}

}  // namespace bbrel
