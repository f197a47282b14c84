#include <cmath>
#include <random>
#include <sstream>

#include "bbrel/cohort_stats.hpp"
#include "doctest.h"

using namespace bbrel;

namespace {

std::vector<FeatureRecord> table(std::vector<std::pair<std::string, std::string>> rows) {
  std::vector<FeatureRecord> out;
  for (auto& [v, t] : rows) out.push_back({{{"a", v}}, t});
  return out;
}

}  // namespace

TEST_CASE("pearson") {
  std::vector<double> x{1, 2, 3, 4};
  std::vector<double> lin{3, 5, 7, 9};
  std::vector<double> neg{-1, -2, -3, -4};
  std::vector<double> y{2, 1, 4, 3};
  CHECK(pearson(x, lin).r == doctest::Approx(1.0));
  CHECK(pearson(x, neg).r == doctest::Approx(-1.0));
  CHECK(pearson(x, y).r == doctest::Approx(0.6));

  std::vector<double> flat{2, 2, 2, 2};
  CHECK_THROWS_AS(pearson(x, flat), DegenerateInput);
  std::vector<double> short_y{1, 2};
  CHECK_THROWS_AS(pearson(x, short_y), std::invalid_argument);
}

TEST_CASE("entropy") {
  std::vector<std::string> fair{"a", "b"};
  CHECK(entropy_bits(fair) == doctest::Approx(1.0));
  std::vector<std::string> one{"a", "a", "a"};
  CHECK(entropy_bits(one) == 0.0);
}

TEST_CASE("information gain") {
  SUBCASE("perfect split of a balanced binary target") {
    auto t = table({{"x", "hi"}, {"x", "hi"}, {"y", "lo"}, {"y", "lo"}});
    CHECK(information_gain(t, "a") == 1.0);
  }
  SUBCASE("independent attribute") {
    auto t = table({{"x", "hi"}, {"x", "lo"}, {"y", "hi"}, {"y", "lo"}});
    CHECK(information_gain(t, "a") == doctest::Approx(0.0));
  }
  SUBCASE("eight-unit contingency table") {
    auto t = table({{"A", "p"}, {"A", "p"}, {"A", "p"}, {"A", "p"},
                    {"B", "p"}, {"B", "p"}, {"B", "q"}, {"B", "q"}});
    double h = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
    CHECK(information_gain(t, "a") == doctest::Approx(h - 0.5).epsilon(1e-12));
    CHECK(information_gain(t, "a") == doctest::Approx(0.3113).epsilon(1e-4));
  }
  SUBCASE("single target class") {
    auto t = table({{"x", "hi"}, {"y", "hi"}});
    CHECK(information_gain(t, "a") == 0.0);
  }
}

TEST_CASE("rank_attributes") {
  std::vector<FeatureRecord> recs;
  // isp determines the target, tech nearly so, region is noise.
  for (int i = 0; i < 40; ++i) {
    std::string target = i % 2 ? "good" : "bad";
    std::string isp = i % 2 ? "A" : "B";
    std::string tech = (i % 2 || i % 10 == 0) ? "fiber" : "dsl";
    recs.push_back({{{"isp", isp}, {"tech", tech}, {"region", i < 20 ? "N" : "S"}}, target});
  }
  auto r = rank_attributes(recs);
  REQUIRE(r.size() == 3);
  CHECK(r[0].attribute == "isp");
  CHECK(r[1].attribute == "tech");
  CHECK(r[2].attribute == "region");

  std::vector<FeatureRecord> tie{{{{"zeta", "1"}, {"alpha", "1"}}, "t"}, {{{"zeta", "2"}, {"alpha", "2"}}, "u"}};
  auto t = rank_attributes(tie);
  CHECK(t[0].attribute == "alpha");
  CHECK(t[1].attribute == "zeta");
}

TEST_CASE("information gain stays within [0, H(target)]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<FeatureRecord> recs;
    std::vector<std::string> targets;
    int n = 2 + rng() % 60;
    for (int i = 0; i < n; ++i) {
      auto t = "t" + std::to_string(rng() % 4);
      recs.push_back({{{"a", "v" + std::to_string(rng() % 5)}}, t});
      targets.push_back(t);
    }
    double ig = information_gain(recs, "a");
    CHECK(ig >= 0.0);
    CHECK(ig <= entropy_bits(targets) + 1e-12);
  }
}

TEST_CASE("binning helpers") {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
  auto cuts = quartile_cuts(v);
  REQUIRE(cuts.size() == 3);
  CHECK(cuts[0] == 2);
  CHECK(cuts[1] == 4);
  CHECK(cuts[2] == 6);
  CHECK(bin_label(1, cuts) == "b0");
  CHECK(bin_label(4, cuts) == "b2");
  CHECK(bin_label(8, cuts) == "b3");

  std::vector<double> th{0.01, 0.05, 0.10};
  auto tc = threshold_complement_cuts(th);
  CHECK(tc == std::vector<double>{0.9, 0.95, 0.99});

  CHECK(capacity_bin(50'000'000) == "32-64Mbps");
  CHECK(capacity_bin(1'500'000) == "1-2Mbps");
}

TEST_CASE("read_indicators_csv") {
  std::istringstream in("region,urban_fraction,pop_density,gsp_per_capita\nIL,0.88,231,57000\nNY,bad,1,1\n");
  IngestReport rep;
  auto rows = read_indicators_csv(in, "indicators.csv", rep);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].region == "IL");
  CHECK(rows[0].urban_fraction == doctest::Approx(0.88));
  CHECK(rep.count("rejected") == 1);
}
