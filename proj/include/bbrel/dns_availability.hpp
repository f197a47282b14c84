#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbrel/core_model.hpp"
#include "bbrel/rational.hpp"

namespace bbrel {

struct DnsHour {
  std::string unit_id;
  Hour hour_start;
  DnsCounts primary;
  DnsCounts secondary;
  double link_loss_rate = 0;
};

enum class DnsStatus { ZeroFailed, OneFailed, TwoFailed, Excluded };

std::string_view to_string(DnsStatus s);

struct DnsStatusResult {
  DnsStatus status = DnsStatus::Excluded;
  std::string reason;  // set when Excluded: "link-loss" or "no-queries"
};

inline constexpr double kDnsLinkLossCutoff = 0.01;

/// A server is down when strictly more than half its queries failed. Hours
/// with link loss above the cutoff, or a server with no queries, are excluded.
DnsStatusResult dns_hour_status(const DnsHour& h, double link_loss_cutoff = kDnsLinkLossCutoff);

/// Joins DNS counters with the hour's link loss rate. Hours without a loss
/// measurement cannot be decoupled from link failures and are skipped; a
/// missing server row becomes zero queries.
std::vector<DnsHour> build_dns_hours(const DnsMap& dns, const LossMap& loss, std::size_t* skipped_no_loss = nullptr);

struct DnsFailureProbabilities {
  std::string isp;
  Rational p_one{0};
  Rational p_two{0};
  std::size_t hours_used = 0;
  std::size_t hours_excluded = 0;
};

class DnsNoData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exactly-one and both-down frequencies over non-excluded hours.
/// Throws DnsNoData ("no-data") when every hour is excluded.
DnsFailureProbabilities dns_failure_probabilities(std::string isp, std::span<const DnsHour> hours,
                                                  double link_loss_cutoff = kDnsLinkLossCutoff);

/// Per ISP of the owning unit; ISPs with no usable hours are reported via `no_data`.
std::vector<DnsFailureProbabilities> dns_failure_probabilities_by_isp(std::span<const DnsHour> hours,
                                                                      std::span<const UnitMeta> units,
                                                                      std::vector<std::string>* no_data = nullptr,
                                                                      double link_loss_cutoff = kDnsLinkLossCutoff);

}  // namespace bbrel
