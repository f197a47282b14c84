#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "bbrel/cli.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using bbrel::cli::ExitCode;

namespace {

fs::path fresh(const std::string& name) {
  auto d = fs::temp_directory_path() / ("bbrel_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = bbrel::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path nine_hour_fixture() {
  auto d = fresh("nine");
  std::ofstream(d / "units.csv") << "unit_id,isp,technology,down_kbps,up_kbps,region,block_group,timezone,active\n"
                                    "u1,Comcast,Cable,50000,10000,IL,IL-1,America/Chicago,true\n";
  std::ofstream pings(d / "pings.csv");
  pings << "unit_id,dtime,target,probes_sent,probes_lost\n";
  const int lost[] = {0, 0, 12, 0, 0, 0, 36, 36, 0};
  for (int i = 0; i < 9; ++i) pings << "u1,2015-01-01T0" << i << ":00:00Z,t1,600," << lost[i] << "\n";
  return d;
}

}  // namespace

TEST_CASE("stats on the nine-hour fixture") {
  auto in = nine_hour_fixture();
  auto out = fresh("nine_out");
  auto r = run({"stats", "--in", in.string(), "--out", out.string(), "--thresholds", "0.05"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto stats = slurp(out / "stats.csv");
  CHECK(stats.find("isp=Comcast,0.05,7,2,1,7,2,0.777778,") != std::string::npos);
  CHECK(fs::exists(out / "run_manifest.json"));
  CHECK(fs::exists(out / "cdf.csv"));
  CHECK(stats.rfind("# config_sha256=", 0) == 0);
}

TEST_CASE("synth is deterministic for a seed") {
  auto a = fresh("synth_a");
  auto b = fresh("synth_b");
  auto cfg = fresh("synth_cfg") / "c.json";
  std::ofstream(cfg) << R"({"synth": {"units": 8, "hours": 48}})";
  REQUIRE(run({"synth", "--seed", "7", "--config", cfg.string(), "--out", a.string()}).code == 0);
  REQUIRE(run({"synth", "--seed", "7", "--config", cfg.string(), "--out", b.string()}).code == 0);
  for (auto name : {"units.csv", "pings.csv", "traffic.csv", "dns.csv", "run_manifest.json"}) {
    CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);
  }
  auto c = fresh("synth_c");
  REQUIRE(run({"synth", "--seed", "8", "--config", cfg.string(), "--out", c.string()}).code == 0);
  CHECK(slurp(a / "pings.csv") != slurp(c / "pings.csv"));
}

TEST_CASE("exit codes") {
  auto in = nine_hour_fixture();

  auto nm = run({"experiment", "--in", in.string(), "--out", fresh("nm").string()});
  CHECK(nm.code == static_cast<int>(ExitCode::kNoMatches));
  CHECK(nm.err.find("no-matches") != std::string::npos);

  auto empty = fresh("empty_in");
  auto out = fresh("missing_out");
  auto missing = run({"stats", "--in", empty.string(), "--out", out.string()});
  CHECK(missing.code == static_cast<int>(ExitCode::kMissingInput));
  CHECK(missing.err.find(".csv") != std::string::npos);
  CHECK(fs::is_empty(out));

  std::ofstream(empty / "units.csv") << "unit_id,isp,technology\n";
  std::ofstream(empty / "pings.csv") << "unit_id,dtime,target,probes_sent,probes_lost\n";
  auto col = run({"stats", "--in", empty.string(), "--out", out.string()});
  CHECK(col.code == static_cast<int>(ExitCode::kMissingInput));
  CHECK(col.err.find("units.csv") != std::string::npos);
  CHECK(col.err.find("column") != std::string::npos);

  CHECK(run({"stats", "--thresholds", "0.05,abc"}).code == static_cast<int>(ExitCode::kUsage));
  CHECK(run({"stats", "--thresholds", "0.1,0.05", "--in", in.string()}).code == static_cast<int>(ExitCode::kUsage));
  CHECK(run({"bogus"}).code == static_cast<int>(ExitCode::kUsage));
  CHECK(run({}).code == static_cast<int>(ExitCode::kUsage));
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("failover, dns, multihome and apsurvey commands") {
  auto data = fresh("pipeline_data");
  REQUIRE(run({"synth", "--seed", "3", "--out", data.string()}).code == 0);
  for (auto cmd : {"ingest", "dns", "multihome"}) {
    auto out = fresh(std::string("cmd_") + cmd);
    auto r = run({cmd, "--in", data.string(), "--out", out.string()});
    CHECK_MESSAGE(r.code == 0, cmd << ": " << r.err);
  }
  CHECK(fs::exists(fs::temp_directory_path() / "bbrel_cli_cmd_dns" / "dns_probs.csv"));
  CHECK(fs::exists(fs::temp_directory_path() / "bbrel_cli_cmd_ingest" / "hourly.csv"));

  auto fo = fresh("failover");
  auto sc = fo / "scenario.json";
  std::ofstream(sc) << R"({"primary": {"name": "p", "capacity_bps": 1e7, "outages": [[60, 360]]},
                           "client": {"buffer_s": 220, "buffer_cap_s": 220}, "duration_s": 600, "dt": 0.1})";
  auto r = run({"failover", "--scenario", sc.string(), "--out", (fo / "out").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto summary = nlohmann::json::parse(slurp(fo / "out" / "failover_summary.json"));
  CHECK(summary.at("stall_count").get<int>() >= 1);
  CHECK(slurp(fo / "out" / "trajectory.csv").find("t,capacity,buffer,quality,stalled") != std::string::npos);

  auto ap = fresh("ap");
  std::ofstream(ap / "scans.csv") << "client_id,timestamp,bssid,ssid,signal_pct,is_current\n"
                                     "c1,t1,AA:BB:CC:DD:EE:01,Home,80,1\n"
                                     "c1,t1,10:00:00:00:00:01,ATT-1,45,0\n";
  auto apr = run({"apsurvey", "--in", ap.string(), "--out", (ap / "out").string()});
  REQUIRE_MESSAGE(apr.code == 0, apr.err);
  auto rep = nlohmann::json::parse(slurp(ap / "out" / "ap_report.json"));
  CHECK(rep.contains("config_hash"));
}

TEST_CASE("the installed binary reports exit codes") {
  auto cmd = std::string(BBREL_CLI_PATH) + " experiment --in " + nine_hour_fixture().string() + " --out " +
             fresh("bin").string() + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == static_cast<int>(ExitCode::kNoMatches));
}
