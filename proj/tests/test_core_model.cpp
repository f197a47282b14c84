#include <filesystem>
#include <fstream>
#include <sstream>

#include "bbrel/core_model.hpp"
#include "bbrel/csv.hpp"
#include "bbrel/synthetic.hpp"
#include "doctest.h"

using namespace bbrel;
namespace fs = std::filesystem;

namespace {

const Hour h0 = parse_hour("2015-03-01T00:00:00Z");

PingHourRaw ping(std::string unit, Hour h, std::string target, std::int64_t sent, std::int64_t lost) {
  PingHourRaw p;
  p.unit_id = std::move(unit);
  p.hour_start = h;
  p.target = std::move(target);
  p.probes_sent = sent;
  p.probes_lost = lost;
  return p;
}

TrafficHourRaw traffic(std::int64_t total_down, std::int64_t test_down) {
  TrafficHourRaw t;
  t.unit_id = "u1";
  t.hour_start = h0;
  t.bytes_down_total = total_down;
  t.bytes_down_test = test_down;
  return t;
}

UnitMeta unit(std::string id, std::string isp, bool active = true) {
  UnitMeta u;
  u.unit_id = std::move(id);
  u.isp = std::move(isp);
  u.active = active;
  return u;
}

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("bbrel_core_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("parse_hour accepts UTC forms and truncates") {
  CHECK(format_hour(parse_hour("2015-03-01T05:42:10Z")) == "2015-03-01T05:00:00Z");
  CHECK(format_hour(parse_hour("2015-03-01 05")) == "2015-03-01T05:00:00Z");
  CHECK(utc_year(parse_hour("2013-12-31T23:00:00Z")) == 2013);
  CHECK_THROWS_AS(parse_hour("2015-03-01T05:00:00+02:00"), TimeError);
  CHECK_THROWS_AS(parse_hour("yesterday"), TimeError);
}

TEST_CASE("timezones") {
  CHECK(TimeZone::parse("UTC-5").local_hour(h0) == 19);
  CHECK(TimeZone::parse("+05:30").offset_at(std::chrono::sys_seconds(h0)) == std::chrono::minutes(330));
  auto chicago = TimeZone::parse("America/Chicago");
  CHECK(chicago.local_hour(parse_hour("2015-01-15T01:00:00Z")) == 19);  // CST
  CHECK(chicago.local_hour(parse_hour("2015-07-15T00:00:00Z")) == 19);  // CDT
  CHECK_THROWS(TimeZone::parse("Mars/Olympus"));
}

TEST_CASE("ip prefixes") {
  auto p = IpPrefix::parse("73.0.0.0/8");
  REQUIRE(p);
  CHECK(p->contains(*IpAddress::parse("73.12.4.1")));
  CHECK_FALSE(p->contains(*IpAddress::parse("12.0.0.1")));
  auto p6 = IpPrefix::parse("2601::/20");
  REQUIRE(p6);
  CHECK(p6->contains(*IpAddress::parse("2601:0abc::1")));
  CHECK_FALSE(p6->contains(*IpAddress::parse("73.12.4.1")));
  CHECK_FALSE(IpPrefix::parse("1.2.3.4/33"));
}

TEST_CASE("ingest_pings takes the minimum ratio across targets") {
  IngestReport rep;
  SUBCASE("two targets") {
    std::vector rows{ping("u1", h0, "A", 600, 10), ping("u1", h0, "B", 600, 0)};
    CHECK(ingest_pings(rows, rep).at({"u1", h0}) == 0.0);
  }
  SUBCASE("single target") {
    std::vector rows{ping("u1", h0, "A", 600, 6)};
    CHECK(ingest_pings(rows, rep).at({"u1", h0}) == doctest::Approx(0.01));
  }
  SUBCASE("three targets") {
    std::vector rows{ping("u1", h0, "A", 1000, 30), ping("u1", h0, "B", 2000, 10), ping("u1", h0, "C", 100, 100)};
    CHECK(ingest_pings(rows, rep).at({"u1", h0}) == doctest::Approx(0.005));
  }
  CHECK(rep.issues.empty());
}

TEST_CASE("ingest_pings rejects invalid rows with their line") {
  IngestReport rep;
  auto bad = ping("u1", h0, "A", 10, 11);
  bad.line = 7;
  std::vector rows{bad, ping("u2", h0, "A", 0, 0)};
  auto m = ingest_pings(rows, rep);
  CHECK(m.empty());
  REQUIRE(rep.issues.size() == 2);
  CHECK(rep.issues[0].line == 7);
  CHECK(rep.issues[0].reason == "lost-exceeds-sent");
  CHECK(rep.issues[1].reason == "no-probes");
  CHECK(rep.count("rejected") == 2);
}

TEST_CASE("ingest_traffic subtracts active-test volume") {
  auto run = [](std::int64_t total, std::int64_t test, IngestReport& rep) {
    std::vector rows{traffic(total, test)};
    return ingest_traffic(rows, rep).at({"u1", h0}).bytes_down;
  };
  IngestReport rep;
  CHECK(run(1'000'000, 100'000, rep) == 900'000);
  CHECK(run(500, 500, rep) == 0);
  CHECK(rep.issues.empty());
  CHECK(run(400, 500, rep) == 0);
  REQUIRE(rep.issues.size() == 1);
  CHECK(rep.issues[0].severity == "flagged");
  CHECK(rep.issues[0].reason == "test-exceeds-total");
}

TEST_CASE("ingest_dns rejects impossible counters") {
  IngestReport rep;
  DnsHourRaw d{"u1", h0, DnsRole::Primary, 4, 5, 3};
  DnsHourRaw ok{"u1", h0, DnsRole::Secondary, 4, 1, 4};
  std::vector rows{d, ok};
  auto m = ingest_dns(rows, rep);
  CHECK_FALSE(m.at({"u1", h0}).primary);
  CHECK(m.at({"u1", h0}).secondary == DnsCounts{4, 1});
  CHECK(rep.issues.at(0).reason == "failures-exceed-queries");
}

TEST_CASE("assemble_hourly keeps loss hours only") {
  LossMap loss{{{"u1", h0}, 0.02}};
  TrafficMap tr{{{"u1", h0}, {10, 5}}, {{"u1", h0 + std::chrono::hours(1)}, {1, 1}}};
  DnsMap dns{{{"u1", h0}, {DnsCounts{4, 3}, DnsCounts{4, 0}}}};
  auto recs = assemble_hourly(loss, tr, dns);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].traffic == Traffic{10, 5});
  CHECK(recs[0].dns_queries == 8);
  CHECK(recs[0].dns_failures == 3);
  CHECK(recs[0].dns_primary_failed == true);
  CHECK(recs[0].dns_secondary_failed == false);

  auto series = series_by_unit(loss);
  CHECK(series.at("u1") == LossSeries{{h0, 0.02}});
}

TEST_CASE("validate_units") {
  ResolverConfig resolvers{{"c1", {*IpAddress::parse("73.1.1.1")}}, {"c2", {*IpAddress::parse("12.1.1.1")}}};
  IspPrefixes prefixes{{"Comcast", {*IpPrefix::parse("73.0.0.0/8")}}, {"AT&T", {*IpPrefix::parse("12.0.0.0/8")}}};
  std::vector meta{unit("c1", "Comcast"), unit("c2", "Comcast"), unit("c3", "Comcast", false), unit("c4", "Cox")};
  auto v = validate_units(meta, {"c1", "c2", "c3", "c4", "ghost"}, &resolvers, &prefixes);
  REQUIRE(v.accepted.size() == 2);
  CHECK(v.accepted[0].unit_id == "c1");
  CHECK(v.accepted[1].unit_id == "c4");
  std::vector<UnitRejection> expected{{"c2", "isp-mismatch"}, {"c3", "flagged"}, {"ghost", "no-meta"}};
  std::sort(v.rejected.begin(), v.rejected.end(), [](auto& a, auto& b) { return a.unit_id < b.unit_id; });
  CHECK(v.rejected == expected);

  auto no_prefixes = validate_units(meta, {"c1", "c2"}, &resolvers, nullptr);
  CHECK(no_prefixes.accepted.size() == 3);
}

TEST_CASE("csv reader") {
  std::istringstream in("# comment\na,b\n\"x, y\",2\n");
  CsvReader r(in, "t.csv");
  CHECK_NOTHROW(r.require({"a", "b"}));
  try {
    r.require({"c"});
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.file() == "t.csv");
    CHECK(e.column() == "c");
  }
  CsvRow row;
  REQUIRE(r.next(row));
  CHECK(row.str("a") == "x, y");
  CHECK(row.int64("b") == 2);
  CHECK_FALSE(r.next(row));

  std::ostringstream out;
  write_csv_row(out, {"plain", "with,comma", "q\"uote"});
  CHECK(out.str() == "plain,\"with,comma\",\"q\"\"uote\"\n");
}

TEST_CASE("synthetic traces") {
  auto spec = SynthSpec::defaults();
  spec.units = 6;
  spec.hours = 48;
  spec.seed = 11;

  SUBCASE("zero-loss process gives zero loss everywhere") {
    spec.loss_profiles = {{"clean", 1, 0, 0, 0}};
    spec.p_missing_hour = 0;
    auto out = generate_synthetic(spec);
    CHECK(out.hourly.size() == 6u * 48u);
    for (const auto& r : out.hourly) CHECK(r.loss_rate == 0.0);
  }
  SUBCASE("injected outage shows up exactly") {
    spec.loss_profiles = {{"clean", 1, 0, 0, 0}};
    spec.p_missing_hour = 0;
    spec.outages = {{2, 10, 2, 0.06}};
    auto out = generate_synthetic(spec);
    auto target = out.units[2].unit_id;
    int lossy = 0;
    for (const auto& r : out.hourly) {
      bool inside = r.unit_id == target && r.hour_start >= spec.start + std::chrono::hours(10) &&
                    r.hour_start < spec.start + std::chrono::hours(12);
      if (inside) CHECK(r.loss_rate >= 0.06);
      if (r.loss_rate >= 0.06) ++lossy;
    }
    CHECK(lossy == 2);
  }
  SUBCASE("deterministic and round-trips through csv") {
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    CHECK(a.hourly == b.hourly);
    CHECK(a.units == b.units);

    auto d1 = scratch_dir("rt1");
    auto d2 = scratch_dir("rt2");
    write_synthetic(a, d1);
    write_synthetic(b, d2);
    for (auto name : {"units.csv", "pings.csv", "traffic.csv", "dns.csv"}) {
      std::ifstream f1(d1 / name), f2(d2 / name);
      std::stringstream s1, s2;
      s1 << f1.rdbuf();
      s2 << f2.rdbuf();
      CHECK(s1.str() == s2.str());
    }
    auto ds = load_dataset(d1);
    CHECK(ds.units == a.units);
    CHECK(ds.hourly() == a.hourly);
  }
  SUBCASE("invalid specs") {
    spec.hours = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    CHECK_THROWS(synth_spec_from_json({{"no_such_key", 1}}));
  }
}

TEST_CASE("load_dataset reports missing inputs by file") {
  auto d = scratch_dir("missing");
  auto expect_error = [&](const std::string& file, bool with_column) {
    try {
      load_dataset(d);
      FAIL("expected CsvError");
    } catch (const CsvError& e) {
      CHECK(e.file() == file);
      CHECK(e.column().empty() != with_column);
    }
  };
  expect_error("units.csv", false);
  std::ofstream(d / "units.csv") << "unit_id,isp\n";
  std::ofstream(d / "pings.csv") << "unit_id,dtime,target,probes_sent,probes_lost\n";
  expect_error("units.csv", true);
  std::ofstream(d / "units.csv") << "unit_id,isp,technology,down_kbps,up_kbps,region,block_group,timezone,active\n";
  fs::remove(d / "pings.csv");
  expect_error("pings.csv", false);
}
