#include "bbrel/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "bbrel/csv.hpp"
#include "json.hpp"

namespace bbrel {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string format_mbps(std::int64_t bps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", static_cast<double>(bps) / 1e6);
  return buf;
}

}  // namespace

std::string_view to_string(Technology t) {
  switch (t) {
    case Technology::Fiber: return "Fiber";
    case Technology::Cable: return "Cable";
    case Technology::CableBusiness: return "CableBusiness";
    case Technology::DSL: return "DSL";
    case Technology::Satellite: return "Satellite";
    case Technology::Wireless: return "Wireless";
  }
  return "Cable";
}

std::optional<Technology> parse_technology(std::string_view s) {
  auto l = lower(trimmed(s));
  if (l == "fiber" || l == "fibre") return Technology::Fiber;
  if (l == "cable") return Technology::Cable;
  if (l == "cablebusiness" || l == "cable business" || l == "cable-business") return Technology::CableBusiness;
  if (l == "dsl") return Technology::DSL;
  if (l == "satellite") return Technology::Satellite;
  if (l == "wireless") return Technology::Wireless;
  return std::nullopt;
}

std::string UnitMeta::tier() const { return format_mbps(down_capacity_bps) + "/" + format_mbps(up_capacity_bps); }

void IngestReport::reject(std::string file, std::size_t line, std::string reason, std::string detail) {
  issues.push_back({std::move(file), line, "rejected", std::move(reason), std::move(detail)});
}

void IngestReport::flag(std::string file, std::size_t line, std::string reason, std::string detail) {
  issues.push_back({std::move(file), line, "flagged", std::move(reason), std::move(detail)});
}

std::size_t IngestReport::count(std::string_view severity) const {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [&](const IngestIssue& i) { return i.severity == severity; }));
}

void IngestReport::write_jsonl(std::ostream& out) const {
  for (const auto& i : issues) {
    nlohmann::json j;
    j["file"] = i.file;
    j["line"] = i.line;
    j["severity"] = i.severity;
    j["reason"] = i.reason;
    if (!i.detail.empty()) j["detail"] = i.detail;
    out << j.dump() << '\n';
  }
}

LossMap ingest_pings(std::span<const PingHourRaw> rows, IngestReport& report, std::string_view file) {
  LossMap out;
  for (const auto& r : rows) {
    if (r.probes_sent <= 0) {
      report.reject(std::string(file), r.line, "no-probes", r.unit_id);
      continue;
    }
    if (r.probes_lost < 0 || r.probes_lost > r.probes_sent) {
      report.reject(std::string(file), r.line, "lost-exceeds-sent", r.unit_id);
      continue;
    }
    double rate = static_cast<double>(r.probes_lost) / static_cast<double>(r.probes_sent);
    auto [it, inserted] = out.try_emplace(UnitHourKey{r.unit_id, r.hour_start}, rate);
    if (!inserted) it->second = std::min(it->second, rate);
  }
  return out;
}

TrafficMap ingest_traffic(std::span<const TrafficHourRaw> rows, IngestReport& report, std::string_view file) {
  TrafficMap out;
  for (const auto& r : rows) {
    if (r.bytes_down_total < 0 || r.bytes_up_total < 0 || r.bytes_down_test < 0 || r.bytes_up_test < 0) {
      report.reject(std::string(file), r.line, "negative-counter", r.unit_id);
      continue;
    }
    auto net = [](std::int64_t total, std::int64_t test) {
      return total >= test ? static_cast<std::uint64_t>(total - test) : std::uint64_t{0};
    };
    if (r.bytes_down_test > r.bytes_down_total || r.bytes_up_test > r.bytes_up_total) {
      report.flag(std::string(file), r.line, "test-exceeds-total", r.unit_id);
    }
    Traffic t{net(r.bytes_down_total, r.bytes_down_test), net(r.bytes_up_total, r.bytes_up_test)};
    auto [it, inserted] = out.try_emplace(UnitHourKey{r.unit_id, r.hour_start}, t);
    if (!inserted) {
      report.reject(std::string(file), r.line, "duplicate", r.unit_id);
    }
  }
  return out;
}

DnsMap ingest_dns(std::span<const DnsHourRaw> rows, IngestReport& report, std::string_view file) {
  DnsMap out;
  for (const auto& r : rows) {
    if (r.queries < 0 || r.failures < 0 || r.failures > r.queries) {
      report.reject(std::string(file), r.line, "failures-exceed-queries", r.unit_id);
      continue;
    }
    auto& pair = out[UnitHourKey{r.unit_id, r.hour_start}];
    auto& slot = r.role == DnsRole::Primary ? pair.primary : pair.secondary;
    if (slot) {
      report.reject(std::string(file), r.line, "duplicate", r.unit_id);
      continue;
    }
    slot = DnsCounts{r.queries, r.failures};
  }
  return out;
}

std::vector<HourlyRecord> assemble_hourly(const LossMap& loss, const TrafficMap& traffic, const DnsMap& dns) {
  std::vector<HourlyRecord> out;
  out.reserve(loss.size());
  for (const auto& [key, rate] : loss) {
    HourlyRecord rec;
    rec.unit_id = key.unit_id;
    rec.hour_start = key.hour;
    rec.loss_rate = rate;
    if (auto it = traffic.find(key); it != traffic.end()) rec.traffic = it->second;
    if (auto it = dns.find(key); it != dns.end()) {
      auto apply = [&](const std::optional<DnsCounts>& c, std::optional<bool>& failed) {
        if (!c) return;
        rec.dns_queries += c->queries;
        rec.dns_failures += c->failures;
        if (c->queries > 0) failed = 2 * c->failures > c->queries;
      };
      apply(it->second.primary, rec.dns_primary_failed);
      apply(it->second.secondary, rec.dns_secondary_failed);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::map<std::string, LossSeries> series_by_unit(const LossMap& loss) {
  std::map<std::string, LossSeries> out;
  for (const auto& [key, rate] : loss) out[key.unit_id].push_back({key.hour, rate});
  return out;
}

UnitValidation validate_units(std::span<const UnitMeta> meta, const std::set<std::string>& observed_units,
                              const ResolverConfig* resolvers, const IspPrefixes* isp_prefixes) {
  UnitValidation out;
  std::set<std::string> known;
  for (const auto& u : meta) {
    known.insert(u.unit_id);
    if (!u.active) {
      out.rejected.push_back({u.unit_id, std::string(reject_reason::kFlagged)});
      continue;
    }
    if (resolvers && isp_prefixes) {
      auto r = resolvers->find(u.unit_id);
      auto p = isp_prefixes->find(u.isp);
      if (r != resolvers->end() && p != isp_prefixes->end()) {
        bool inside = std::all_of(r->second.begin(), r->second.end(), [&](const IpAddress& addr) {
          return std::any_of(p->second.begin(), p->second.end(),
                             [&](const IpPrefix& prefix) { return prefix.contains(addr); });
        });
        if (!inside) {
          out.rejected.push_back({u.unit_id, std::string(reject_reason::kIspMismatch)});
          continue;
        }
      }
    }
    out.accepted.push_back(u);
  }
  for (const auto& id : observed_units) {
    if (!known.contains(id)) out.rejected.push_back({id, std::string(reject_reason::kNoMeta)});
  }
  std::sort(out.accepted.begin(), out.accepted.end(),
            [](const UnitMeta& a, const UnitMeta& b) { return a.unit_id < b.unit_id; });
  std::sort(out.rejected.begin(), out.rejected.end(),
            [](const UnitRejection& a, const UnitRejection& b) { return a.unit_id < b.unit_id; });
  return out;
}

// --- readers ----------------------------------------------------------------

namespace {

template <typename Fn>
void for_each_row(CsvReader& reader, IngestReport& report, Fn&& fn) {
  CsvRow row;
  while (reader.next(row)) {
    try {
      fn(row);
    } catch (const std::exception& e) {
      report.reject(reader.file_name(), row.line(), "malformed", e.what());
    }
  }
}

}  // namespace

std::vector<PingHourRaw> read_pings_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"unit_id", "dtime", "target", "probes_sent", "probes_lost"});
  bool has_rtt = reader.has_column("rtt_min") && reader.has_column("rtt_avg") && reader.has_column("rtt_max");
  std::vector<PingHourRaw> out;
  for_each_row(reader, report, [&](const CsvRow& row) {
    PingHourRaw r;
    r.unit_id = trimmed(row.str("unit_id"));
    if (r.unit_id.empty()) throw std::invalid_argument("empty unit_id");
    r.hour_start = parse_hour(row.str("dtime"));
    r.target = trimmed(row.str("target"));
    r.probes_sent = row.int64("probes_sent");
    r.probes_lost = row.int64("probes_lost");
    if (has_rtt && !row.str("rtt_avg").empty()) {
      r.rtt = RttSummary{row.real("rtt_min"), row.real("rtt_avg"), row.real("rtt_max")};
    }
    r.line = row.line();
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<TrafficHourRaw> read_traffic_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"unit_id", "dtime", "bytes_down_total", "bytes_up_total", "bytes_down_test", "bytes_up_test"});
  std::vector<TrafficHourRaw> out;
  for_each_row(reader, report, [&](const CsvRow& row) {
    TrafficHourRaw r;
    r.unit_id = trimmed(row.str("unit_id"));
    if (r.unit_id.empty()) throw std::invalid_argument("empty unit_id");
    r.hour_start = parse_hour(row.str("dtime"));
    r.bytes_down_total = row.int64("bytes_down_total");
    r.bytes_up_total = row.int64("bytes_up_total");
    r.bytes_down_test = row.int64("bytes_down_test");
    r.bytes_up_test = row.int64("bytes_up_test");
    r.line = row.line();
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<DnsHourRaw> read_dns_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"unit_id", "dtime", "server_role", "queries", "failures"});
  std::vector<DnsHourRaw> out;
  for_each_row(reader, report, [&](const CsvRow& row) {
    DnsHourRaw r;
    r.unit_id = trimmed(row.str("unit_id"));
    if (r.unit_id.empty()) throw std::invalid_argument("empty unit_id");
    r.hour_start = parse_hour(row.str("dtime"));
    auto role = lower(trimmed(row.str("server_role")));
    if (role == "primary") {
      r.role = DnsRole::Primary;
    } else if (role == "secondary") {
      r.role = DnsRole::Secondary;
    } else {
      throw std::invalid_argument("bad server_role: " + role);
    }
    r.queries = row.int64("queries");
    r.failures = row.int64("failures");
    r.line = row.line();
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<UnitMeta> read_units_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"unit_id", "isp", "technology", "down_kbps", "up_kbps", "region", "block_group", "timezone",
                  "active"});
  std::vector<UnitMeta> out;
  std::set<std::string> seen;
  for_each_row(reader, report, [&](const CsvRow& row) {
    UnitMeta u;
    u.unit_id = trimmed(row.str("unit_id"));
    if (u.unit_id.empty()) throw std::invalid_argument("empty unit_id");
    u.isp = trimmed(row.str("isp"));
    auto tech = parse_technology(row.str("technology"));
    if (!tech) throw std::invalid_argument("bad technology: " + std::string(row.str("technology")));
    u.technology = *tech;
    u.down_capacity_bps = row.int64("down_kbps") * 1000;
    u.up_capacity_bps = row.int64("up_kbps") * 1000;
    if (u.down_capacity_bps <= 0 || u.up_capacity_bps <= 0) throw std::invalid_argument("non-positive capacity");
    u.region = trimmed(row.str("region"));
    u.block_group = trimmed(row.str("block_group"));
    u.timezone = trimmed(row.str("timezone"));
    u.active = row.boolean("active");
    if (!seen.insert(u.unit_id).second) {
      report.reject(file, row.line(), "duplicate-unit", u.unit_id);
      return;
    }
    out.push_back(std::move(u));
  });
  return out;
}

ResolverConfig read_resolvers_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"unit_id", "address"});
  ResolverConfig out;
  for_each_row(reader, report, [&](const CsvRow& row) {
    auto addr = IpAddress::parse(trimmed(row.str("address")));
    if (!addr) throw std::invalid_argument("bad address: " + std::string(row.str("address")));
    out[trimmed(row.str("unit_id"))].push_back(*addr);
  });
  return out;
}

IspPrefixes read_isp_prefixes_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"isp", "prefix"});
  IspPrefixes out;
  for_each_row(reader, report, [&](const CsvRow& row) {
    auto prefix = IpPrefix::parse(trimmed(row.str("prefix")));
    if (!prefix) throw std::invalid_argument("bad prefix: " + std::string(row.str("prefix")));
    out[trimmed(row.str("isp"))].push_back(*prefix);
  });
  return out;
}

// --- writers ----------------------------------------------------------------

void write_pings_csv(std::ostream& out, std::span<const PingHourRaw> rows) {
  out << "unit_id,dtime,target,probes_sent,probes_lost\n";
  for (const auto& r : rows) {
    write_csv_row(out, {r.unit_id, format_hour(r.hour_start), r.target, std::to_string(r.probes_sent),
                        std::to_string(r.probes_lost)});
  }
}

void write_traffic_csv(std::ostream& out, std::span<const TrafficHourRaw> rows) {
  out << "unit_id,dtime,bytes_down_total,bytes_up_total,bytes_down_test,bytes_up_test\n";
  for (const auto& r : rows) {
    write_csv_row(out, {r.unit_id, format_hour(r.hour_start), std::to_string(r.bytes_down_total),
                        std::to_string(r.bytes_up_total), std::to_string(r.bytes_down_test),
                        std::to_string(r.bytes_up_test)});
  }
}

void write_dns_csv(std::ostream& out, std::span<const DnsHourRaw> rows) {
  out << "unit_id,dtime,server_role,queries,failures\n";
  for (const auto& r : rows) {
    write_csv_row(out, {r.unit_id, format_hour(r.hour_start), r.role == DnsRole::Primary ? "primary" : "secondary",
                        std::to_string(r.queries), std::to_string(r.failures)});
  }
}

void write_units_csv(std::ostream& out, std::span<const UnitMeta> units) {
  out << "unit_id,isp,technology,down_kbps,up_kbps,region,block_group,timezone,active\n";
  for (const auto& u : units) {
    write_csv_row(out, {u.unit_id, u.isp, std::string(to_string(u.technology)),
                        std::to_string(u.down_capacity_bps / 1000), std::to_string(u.up_capacity_bps / 1000), u.region,
                        u.block_group, u.timezone, u.active ? "true" : "false"});
  }
}

void write_hourly_csv(std::ostream& out, std::span<const HourlyRecord> records) {
  out << "unit_id,dtime,loss_rate,bytes_down,bytes_up,dns_queries,dns_failures,dns_primary_failed,"
         "dns_secondary_failed\n";
  auto opt_bool = [](const std::optional<bool>& b) -> std::string {
    if (!b) return "";
    return *b ? "true" : "false";
  };
  for (const auto& r : records) {
    char loss[40];
    std::snprintf(loss, sizeof loss, "%.17g", r.loss_rate);
    write_csv_row(out, {r.unit_id, format_hour(r.hour_start), loss,
                        r.traffic ? std::to_string(r.traffic->bytes_down) : "",
                        r.traffic ? std::to_string(r.traffic->bytes_up) : "", std::to_string(r.dns_queries),
                        std::to_string(r.dns_failures), opt_bool(r.dns_primary_failed),
                        opt_bool(r.dns_secondary_failed)});
  }
}

// --- dataset ----------------------------------------------------------------

const UnitMeta* Dataset::find_unit(std::string_view unit_id) const {
  auto it = std::lower_bound(units.begin(), units.end(), unit_id,
                             [](const UnitMeta& u, std::string_view id) { return u.unit_id < id; });
  if (it == units.end() || it->unit_id != unit_id) return nullptr;
  return &*it;
}

std::map<std::string, LossSeries> Dataset::series() const { return series_by_unit(loss); }

std::vector<HourlyRecord> Dataset::hourly() const { return assemble_hourly(loss, traffic, dns); }

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path.filename().string(), "", "cannot open input file " + path.string());
  return in;
}

template <typename Map>
void keep_units(Map& m, const std::set<std::string>& accepted) {
  for (auto it = m.begin(); it != m.end();) {
    if (accepted.contains(it->first.unit_id)) {
      ++it;
    } else {
      it = m.erase(it);
    }
  }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options) {
  Dataset ds;
  namespace fs = std::filesystem;

  auto units_path = dir / "units.csv";
  auto pings_path = dir / "pings.csv";
  std::vector<UnitMeta> meta;
  {
    auto in = open_input(units_path);
    meta = read_units_csv(in, "units.csv", ds.report);
    ds.inputs.push_back(units_path);
  }
  {
    auto in = open_input(pings_path);
    auto rows = read_pings_csv(in, "pings.csv", ds.report);
    ds.loss = ingest_pings(rows, ds.report, "pings.csv");
    ds.inputs.push_back(pings_path);
  }
  if (auto p = dir / "traffic.csv"; fs::exists(p)) {
    auto in = open_input(p);
    auto rows = read_traffic_csv(in, "traffic.csv", ds.report);
    ds.traffic = ingest_traffic(rows, ds.report, "traffic.csv");
    ds.inputs.push_back(p);
  }
  if (auto p = dir / "dns.csv"; fs::exists(p)) {
    auto in = open_input(p);
    auto rows = read_dns_csv(in, "dns.csv", ds.report);
    ds.dns = ingest_dns(rows, ds.report, "dns.csv");
    ds.inputs.push_back(p);
  }

  std::optional<ResolverConfig> resolvers;
  std::optional<IspPrefixes> prefixes;
  auto prefix_path = dir / "isp_prefixes.csv";
  auto resolver_path = dir / "resolvers.csv";
  bool validate = options.validate_isp.value_or(fs::exists(prefix_path));
  if (validate) {
    {
      auto in = open_input(prefix_path);
      prefixes = read_isp_prefixes_csv(in, "isp_prefixes.csv", ds.report);
      ds.inputs.push_back(prefix_path);
    }
    {
      auto in = open_input(resolver_path);
      resolvers = read_resolvers_csv(in, "resolvers.csv", ds.report);
      ds.inputs.push_back(resolver_path);
    }
  }

  std::set<std::string> observed;
  for (const auto& [key, _] : ds.loss) observed.insert(key.unit_id);
  auto validation = validate_units(meta, observed, resolvers ? &*resolvers : nullptr, prefixes ? &*prefixes : nullptr);
  ds.units = std::move(validation.accepted);
  ds.rejected_units = std::move(validation.rejected);

  std::set<std::string> accepted;
  for (const auto& u : ds.units) accepted.insert(u.unit_id);
  keep_units(ds.loss, accepted);
  keep_units(ds.traffic, accepted);
  keep_units(ds.dns, accepted);
  return ds;
}

}  // namespace bbrel
