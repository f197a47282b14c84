#include <boost/multiprecision/cpp_int.hpp>

#include "bbrel/experiments.hpp"
#include "doctest.h"

using namespace bbrel;
using std::chrono::hours;

namespace {

const Hour h0 = parse_hour("2015-01-01T00:00:00Z");

UnitMeta unit(std::string id, double down_mbps, double up_mbps, std::string region = "X") {
  UnitMeta u;
  u.unit_id = std::move(id);
  u.isp = "ISP";
  u.region = std::move(region);
  u.timezone = "UTC";
  u.down_capacity_bps = static_cast<std::int64_t>(down_mbps * 1e6);
  u.up_capacity_bps = static_cast<std::int64_t>(up_mbps * 1e6);
  return u;
}

LossSeries series(std::size_t n, double loss, std::size_t lossy = SIZE_MAX) {
  LossSeries s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({h0 + hours(i), lossy == SIZE_MAX || i < lossy ? loss : 0.0});
  return s;
}

double exact_tail(int n, int k) {
  using boost::multiprecision::cpp_int;
  cpp_int sum = 0, c = 1;
  for (int i = 0; i <= n; ++i) {
    if (i >= k) sum += c;
    c = c * (n - i) / (i + 1);
  }
  return Rational(sum, cpp_int(1) << n).convert_to<double>();
}

std::string label_of(const std::map<std::string, CohortSpec>& m, const std::string& id) {
  auto it = m.find(id);
  return it == m.end() ? "" : it->second.label;
}

}  // namespace

TEST_CASE("binom_one_tailed") {
  CHECK(binom_one_tailed(1, 0) == 1.0);
  CHECK(binom_one_tailed(1, 1) == 0.5);
  CHECK(binom_one_tailed(20, 15) == doctest::Approx(21700.0 / 1048576.0).epsilon(1e-12));
  CHECK(binom_one_tailed(10, 10) == doctest::Approx(1.0 / 1024));
  CHECK(binom_one_tailed(10, 5) == doctest::Approx(638.0 / 1024));
  CHECK_THROWS_AS(binom_one_tailed(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(binom_one_tailed(5, 6), std::invalid_argument);
  for (int n = 1; n <= 60; n += 7) {
    for (int k = 0; k <= n; ++k) CHECK(std::abs(binom_one_tailed(n, k) - exact_tail(n, k)) <= 1e-12);
  }
}

TEST_CASE("intervals and bins") {
  auto bins = default_avg_loss_bins();
  CHECK_NOTHROW(validate_bins(bins));
  auto hl = default_high_loss_bins();
  CHECK_NOTHROW(validate_bins(hl));

  std::vector<CohortSpec> overlapping{{CohortMetric::AvgLossRate, {0, 0.02, true, true}, "a"},
                                      {CohortMetric::AvgLossRate, {0.01, 0.03, false, true}, "b"}};
  CHECK_THROWS_AS(validate_bins(overlapping), std::invalid_argument);

  Interval i{0.01, 0.02, false, true};
  CHECK_FALSE(i.contains(0.01));
  CHECK(i.contains(0.02));
  CHECK(i.to_string() == "(0.01, 0.02]");
}

TEST_CASE("avg_loss_cohorts") {
  std::map<std::string, LossSeries> s{
      {"ctl", series(10, 0.0003)}, {"mid", series(10, 0.015)}, {"edge", series(10, 0.01)}, {"none", series(10, 0.003)}};
  auto bins = default_avg_loss_bins();
  auto m = avg_loss_cohorts(s, bins);
  CHECK(label_of(m, "ctl") == "control");
  CHECK(label_of(m, "mid") == "(1%,2%]");
  CHECK(label_of(m, "edge") == "(0.5%,1%]");
  CHECK(m.count("none") == 0);
}

TEST_CASE("high_loss_fraction_cohorts") {
  std::map<std::string, LossSeries> s{
      {"zero", series(100, 0.0)}, {"five", series(100, 0.06, 5)}, {"all", series(100, 0.2)}};
  auto bins = default_high_loss_bins();
  CHECK(high_loss_fraction(s["five"]) == doctest::Approx(0.05));
  auto m = high_loss_fraction_cohorts(s, bins);
  CHECK(m.at("zero").bin.lower == 0);
  CHECK(m.at("zero").bin.lower_closed);
  CHECK(m.at("five").bin.lower == doctest::Approx(0.01));
  CHECK(m.at("all").bin.lower == doctest::Approx(0.1));
}

TEST_CASE("match_pairs") {
  CHECK(within_tolerance(50, 52, 0.1));
  CHECK_FALSE(within_tolerance(50, 60, 0.1));

  std::vector<UnitMeta> t{unit("t", 50, 10)};
  std::vector<UnitMeta> c{unit("c", 52, 10.5)};
  CHECK(match_pairs(t, c) == std::vector<MatchPair>{{"t", "c"}});

  std::vector<UnitMeta> other_region{unit("c", 50, 10, "Y")};
  try {
    match_pairs(t, other_region);
    FAIL("expected no-matches");
  } catch (const ExperimentError& e) {
    CHECK(e.code() == "no-matches");
  }

  // Two treatments competing for one control: the faster treatment goes first.
  std::vector<UnitMeta> t2{unit("t1", 50, 10), unit("t2", 53, 10)};
  std::vector<UnitMeta> c1{unit("c1", 51, 10)};
  CHECK(match_pairs(t2, c1) == std::vector<MatchPair>{{"t2", "c1"}});
}

TEST_CASE("evaluate_hypothesis") {
  std::map<std::string, std::vector<HourlyRecord>> hours;
  std::map<std::string, UnitMeta> units;
  std::vector<MatchPair> pairs;
  auto add = [&](const std::string& id, std::uint64_t bytes) {
    units[id] = unit(id, 50, 10);
    HourlyRecord r;
    r.unit_id = id;
    r.hour_start = h0 + std::chrono::hours(20);
    r.traffic = Traffic{bytes, 0};
    hours[id] = {r};
  };
  CohortSpec ctl{CohortMetric::AvgLossRate, {}, "control"};
  CohortSpec trt{CohortMetric::AvgLossRate, {}, "treat"};

  for (int i = 0; i < 10; ++i) {
    add("t" + std::to_string(i), 100);
    add("c" + std::to_string(i), i < 5 ? 200 : 50);
    pairs.push_back({"t" + std::to_string(i), "c" + std::to_string(i)});
  }
  auto half = evaluate_hypothesis(pairs, hours, units, ctl, trt, ComparisonScope::AllHours);
  CHECK(half.pairs == 10);
  CHECK(half.h_holds == 5);
  CHECK(half.p_value == doctest::Approx(0.623).epsilon(1e-3));
  CHECK_FALSE(half.significant);

  for (int i = 5; i < 10; ++i) add("c" + std::to_string(i), 200);
  auto all = evaluate_hypothesis(pairs, hours, units, ctl, trt, ComparisonScope::AllHours);
  CHECK(all.h_holds_pct == 1.0);
  CHECK(all.p_value == doctest::Approx(1.0 / 1024));
  CHECK(all.significant);
  CHECK(all.practically_important);

  // A pair without traffic is dropped, not counted.
  hours["t0"][0].traffic.reset();
  auto dropped = evaluate_hypothesis(pairs, hours, units, ctl, trt, ComparisonScope::AllHours);
  CHECK(dropped.pairs == 9);
  CHECK(dropped.dropped_pairs == 1);

  // Peak-no-loss scope drops a lossy peak hour.
  for (auto& [id, recs] : hours) recs[0].loss_rate = 0.02;
  CHECK_THROWS_AS(evaluate_hypothesis(pairs, hours, units, ctl, trt, ComparisonScope::PeakNoLoss), ExperimentError);
}

TEST_CASE("make_result: significant but not practically important") {
  auto r = make_result({}, {}, 10000, 5150);
  CHECK(r.significant);
  CHECK_FALSE(r.practically_important);
}

TEST_CASE("experiment config round trip") {
  auto hl = default_high_loss_experiment();
  CHECK(hl.comparisons.size() == 7);
  CHECK(hl.scope == ComparisonScope::PeakNoLoss);
  auto again = experiment_config_from_json(to_json(hl));
  CHECK(to_json(again) == to_json(hl));
  CHECK_THROWS(experiment_config_from_json({{"metric", "bogus"}}));
}
