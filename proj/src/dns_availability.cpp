#include "bbrel/dns_availability.hpp"

namespace bbrel {

std::string_view to_string(DnsStatus s) {
  switch (s) {
    case DnsStatus::ZeroFailed: return "zero-failed";
    case DnsStatus::OneFailed: return "one-failed";
    case DnsStatus::TwoFailed: return "two-failed";
    case DnsStatus::Excluded: return "excluded";
  }
  return "excluded";
}

DnsStatusResult dns_hour_status(const DnsHour& h, double link_loss_cutoff) {
  if (h.link_loss_rate > link_loss_cutoff) return {DnsStatus::Excluded, "link-loss"};
  if (h.primary.queries <= 0 || h.secondary.queries <= 0) return {DnsStatus::Excluded, "no-queries"};
  auto down = [](const DnsCounts& c) { return 2 * c.failures > c.queries; };
  int failed = (down(h.primary) ? 1 : 0) + (down(h.secondary) ? 1 : 0);
  static constexpr DnsStatus kByCount[] = {DnsStatus::ZeroFailed, DnsStatus::OneFailed, DnsStatus::TwoFailed};
  return {kByCount[failed], {}};
}

std::vector<DnsHour> build_dns_hours(const DnsMap& dns, const LossMap& loss, std::size_t* skipped_no_loss) {
  std::vector<DnsHour> out;
  std::size_t skipped = 0;
  for (const auto& [key, pair] : dns) {
    auto it = loss.find(key);
    if (it == loss.end()) {
      ++skipped;
      continue;
    }
    DnsHour h;
    h.unit_id = key.unit_id;
    h.hour_start = key.hour;
    h.primary = pair.primary.value_or(DnsCounts{});
    h.secondary = pair.secondary.value_or(DnsCounts{});
    h.link_loss_rate = it->second;
    out.push_back(std::move(h));
  }
  if (skipped_no_loss) *skipped_no_loss = skipped;
  return out;
}

DnsFailureProbabilities dns_failure_probabilities(std::string isp, std::span<const DnsHour> hours,
                                                  double link_loss_cutoff) {
  DnsFailureProbabilities out;
  out.isp = std::move(isp);
  std::int64_t one = 0, two = 0;
  for (const auto& h : hours) {
    switch (dns_hour_status(h, link_loss_cutoff).status) {
      case DnsStatus::Excluded: ++out.hours_excluded; continue;
      case DnsStatus::OneFailed: ++one; break;
      case DnsStatus::TwoFailed: ++two; break;
      case DnsStatus::ZeroFailed: break;
    }
    ++out.hours_used;
  }
  if (out.hours_used == 0) throw DnsNoData("no-data: every DNS hour for '" + out.isp + "' was excluded");
  auto used = static_cast<std::int64_t>(out.hours_used);
  out.p_one = ratio(one, used);
  out.p_two = ratio(two, used);
  return out;
}

std::vector<DnsFailureProbabilities> dns_failure_probabilities_by_isp(std::span<const DnsHour> hours,
                                                                      std::span<const UnitMeta> units,
                                                                      std::vector<std::string>* no_data,
                                                                      double link_loss_cutoff) {
  std::map<std::string, std::string> isp_of;
  for (const auto& u : units) isp_of.emplace(u.unit_id, u.isp);
  std::map<std::string, std::vector<DnsHour>> grouped;
  for (const auto& h : hours) {
    auto it = isp_of.find(h.unit_id);
    if (it != isp_of.end()) grouped[it->second].push_back(h);
  }
  std::vector<DnsFailureProbabilities> out;
  for (const auto& [isp, hs] : grouped) {
    try {
      out.push_back(dns_failure_probabilities(isp, hs, link_loss_cutoff));
    } catch (const DnsNoData&) {
      if (no_data) no_data->push_back(isp);
    }
  }
  return out;
}

}  // namespace bbrel
