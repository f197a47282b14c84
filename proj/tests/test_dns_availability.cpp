#include "bbrel/dns_availability.hpp"
#include "doctest.h"

using namespace bbrel;
using std::chrono::hours;

namespace {

const Hour h0 = parse_hour("2015-01-01T00:00:00Z");

DnsHour hour(int i, DnsCounts p, DnsCounts s, double loss = 0) {
  return {"u1", h0 + hours(i), p, s, loss};
}

std::vector<DnsHour> corpus(int zero, int one, int two) {
  std::vector<DnsHour> out;
  int i = 0;
  for (int k = 0; k < zero; ++k) out.push_back(hour(i++, {10, 0}, {10, 0}));
  for (int k = 0; k < one; ++k) out.push_back(hour(i++, {10, 10}, {10, 0}));
  for (int k = 0; k < two; ++k) out.push_back(hour(i++, {10, 10}, {10, 10}));
  return out;
}

}  // namespace

TEST_CASE("dns_hour_status") {
  CHECK(dns_hour_status(hour(0, {10, 6}, {10, 0})).status == DnsStatus::OneFailed);
  CHECK(dns_hour_status(hour(0, {10, 5}, {10, 0})).status == DnsStatus::ZeroFailed);
  CHECK(dns_hour_status(hour(0, {10, 10}, {10, 10})).status == DnsStatus::TwoFailed);

  auto lossy = dns_hour_status(hour(0, {10, 10}, {10, 10}, 0.02));
  CHECK(lossy.status == DnsStatus::Excluded);
  CHECK(lossy.reason == "link-loss");
  CHECK(dns_hour_status(hour(0, {10, 0}, {10, 0}, 0.01)).status == DnsStatus::ZeroFailed);

  auto silent = dns_hour_status(hour(0, {0, 0}, {10, 0}));
  CHECK(silent.status == DnsStatus::Excluded);
  CHECK(silent.reason == "no-queries");
}

TEST_CASE("dns_failure_probabilities") {
  auto p = dns_failure_probabilities("X", corpus(98, 1, 1));
  CHECK(p.p_one == Rational(1, 100));
  CHECK(p.p_two == Rational(1, 100));
  CHECK(p.hours_used == 100);

  auto none = dns_failure_probabilities("X", corpus(10, 0, 0));
  CHECK(none.p_one == 0);
  CHECK(none.p_two == 0);

  auto inverted = dns_failure_probabilities("Comcast", corpus(9890, 10, 100));
  CHECK(inverted.p_two == 10 * inverted.p_one);

  std::vector<DnsHour> excluded{hour(0, {10, 0}, {10, 0}, 0.5)};
  CHECK_THROWS_AS(dns_failure_probabilities("X", excluded), DnsNoData);
}

TEST_CASE("build_dns_hours joins link loss and skips unmeasured hours") {
  DnsMap dns{{{"u1", h0}, {DnsCounts{4, 0}, std::nullopt}}, {{"u1", h0 + hours(1)}, {DnsCounts{4, 4}, DnsCounts{4, 4}}}};
  LossMap loss{{{"u1", h0}, 0.0}};
  std::size_t skipped = 0;
  auto hrs = build_dns_hours(dns, loss, &skipped);
  REQUIRE(hrs.size() == 1);
  CHECK(skipped == 1);
  CHECK(hrs[0].secondary.queries == 0);
  CHECK(dns_hour_status(hrs[0]).status == DnsStatus::Excluded);
}

TEST_CASE("by ISP") {
  auto hrs = corpus(98, 1, 1);
  std::vector<UnitMeta> units(2);
  units[0].unit_id = "u1";
  units[0].isp = "A";
  units[1].unit_id = "u2";
  units[1].isp = "B";
  std::vector<std::string> no_data;
  auto rows = dns_failure_probabilities_by_isp(hrs, units, &no_data);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].isp == "A");
}
