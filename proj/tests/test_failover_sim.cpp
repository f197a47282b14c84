#include "bbrel/failover_sim.hpp"
#include "doctest.h"

using namespace bbrel;

namespace {

LinkModel link(double mbps, std::vector<TimeInterval> outages = {}) { return {"l", mbps * 1e6, std::move(outages)}; }

Scenario outage_scenario(bool with_secondary, double buffer = 220) {
  Scenario s;
  s.primary = link(10, {{60, 360}});
  if (with_secondary) s.secondary = link(8);
  s.client.buffer_s = buffer;
  s.client.buffer_cap_s = buffer;
  s.duration_s = 600;
  s.dt = 0.1;
  return s;
}

}  // namespace

TEST_CASE("effective_capacity") {
  auto primary = link(10, {{100, 200}});
  auto secondary = link(4);
  FailoverPolicy pol;
  CHECK(effective_capacity(50, primary, &secondary, pol) == 10e6);
  CHECK(effective_capacity(102, primary, &secondary, pol) == 0);  // detecting
  CHECK(effective_capacity(150, primary, &secondary, pol) == 4e6);
  CHECK(effective_capacity(150, primary, nullptr, pol) == 0);
  CHECK(effective_capacity(200, primary, &secondary, pol) == 10e6);

  pol.switchback = true;
  pol.switchback_delay_s = 30;
  CHECK(effective_capacity(210, primary, &secondary, pol) == 4e6);
  CHECK(effective_capacity(231, primary, &secondary, pol) == 10e6);

  CHECK(delivered_bits(0, 300, primary, &secondary, FailoverPolicy{}) ==
        doctest::Approx(10e6 * 200 + 4e6 * 95));
}

TEST_CASE("link validation") {
  CHECK_THROWS_AS(link(1, {{10, 5}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(link(1, {{0, 10}, {5, 20}}).validate(), std::invalid_argument);
  CHECK_NOTHROW(link(1, {{0, 10}, {10, 20}}).validate());
}

TEST_CASE("step_stream fluid model") {
  StreamClient c;
  c.abr.enabled = false;
  c.buffer_s = 50;
  step_stream(c, c.bitrate_bps(), 10);
  CHECK(c.buffer_s == doctest::Approx(50));

  StreamClient empty;
  empty.abr.enabled = false;
  empty.buffer_s = 0;
  for (int i = 0; i < 1000; ++i) step_stream(empty, 2 * empty.bitrate_bps(), 0.1);
  CHECK(empty.buffer_s == doctest::Approx(100).epsilon(1e-6));

  StreamClient drain;
  drain.abr.enabled = false;
  drain.buffer_s = 220;
  drain.buffer_cap_s = 220;
  double t = 0;
  std::optional<double> stall_at;
  while (!stall_at && t < 400) {
    auto r = step_stream(drain, 0, 0.1);
    if (r.stall_offset_s) stall_at = t + *r.stall_offset_s;
    t += 0.1;
  }
  REQUIRE(stall_at);
  CHECK(*stall_at == doctest::Approx(220).epsilon(1e-9));

  CHECK_THROWS_AS(step_stream(drain, 0, 0), std::invalid_argument);
}

TEST_CASE("five-minute outage") {
  auto without = run_scenario(outage_scenario(false));
  REQUIRE(without.summary.stall_count >= 1);
  CHECK(without.summary.stall_times[0] == doctest::Approx(280).epsilon(0.1 / 280));
  REQUIRE(without.summary.primary_onsets.size() == 1);
  CHECK(without.summary.primary_onsets[0].buffer_s == doctest::Approx(220));

  auto with = run_scenario(outage_scenario(true));
  CHECK(with.summary.stall_count == 0);
}

TEST_CASE("quality drops after an outage without failover") {
  Scenario s;
  s.primary = link(8, {{100, 160}, {400, 430}});
  s.client.buffer_s = 20;
  s.client.buffer_cap_s = 60;
  s.duration_s = 600;
  auto tr = run_scenario(s);
  bool dropped = false;
  for (const auto& smp : tr.samples) {
    if (smp.t > 100 && smp.quality < 2) dropped = true;
  }
  CHECK(dropped);
  CHECK(tr.summary.quality_seconds.at("480p") > 0);
}

TEST_CASE("determinism and scenario parsing") {
  auto a = run_scenario(outage_scenario(false));
  auto b = run_scenario(outage_scenario(false));
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].buffer_s == b.samples[i].buffer_s);
  }

  auto j = nlohmann::json::parse(R"({
    "primary": {"name": "p", "capacity_bps": 1e7, "outages": [[60, 360]]},
    "client": {"buffer_s": 220, "buffer_cap_s": 220},
    "duration_s": 600, "dt": 0.5})");
  auto sc = scenario_from_json(j);
  CHECK_FALSE(sc.secondary);
  CHECK(sc.client.buffer_s == 220);
  CHECK(sc.dt == 0.5);

  j["dt"] = 0.7;
  CHECK_THROWS_AS(run_scenario(scenario_from_json(j)), std::invalid_argument);
}
