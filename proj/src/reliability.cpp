#include "bbrel/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace bbrel {

namespace {

void check_series(std::span<const LossSample> series) {
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i].hour <= series[i - 1].hour) throw std::invalid_argument("series not strictly sorted by hour");
  }
}

void check_threshold(double threshold) {
  if (!(threshold > 0 && threshold <= 1)) throw std::invalid_argument("threshold must lie in (0, 1]");
}

}  // namespace

std::vector<FailureEvent> classify_failures(std::string_view unit_id, std::span<const LossSample> series,
                                            double threshold) {
  check_threshold(threshold);
  check_series(series);
  std::vector<FailureEvent> events;
  FailureEvent open;
  bool in_run = false;
  Hour prev{};
  for (const auto& s : series) {
    bool contiguous = in_run && s.hour == prev + std::chrono::hours{1};
    if (in_run && (!contiguous || s.loss_rate < threshold)) {
      events.push_back(std::move(open));
      in_run = false;
    }
    if (s.loss_rate >= threshold) {
      if (!in_run) {
        open = FailureEvent{std::string(unit_id), s.hour, 0, threshold, 0};
        in_run = true;
      }
      open.duration += 1;
      open.max_loss = std::max(open.max_loss, s.loss_rate);
    }
    prev = s.hour;
  }
  if (in_run) events.push_back(std::move(open));
  return events;
}

ReliabilityStats compute_stats(std::span<const LossSample> series, double threshold, std::string scope) {
  if (series.empty()) throw ReliabilityError("empty-scope", "no observed hours in scope '" + scope + "'");
  auto events = classify_failures("", series, threshold);
  ReliabilityStats st;
  st.scope = std::move(scope);
  st.threshold = threshold;
  for (const auto& s : series) {
    if (s.loss_rate >= threshold) {
      ++st.downtime_hours;
    } else {
      ++st.uptime_hours;
    }
  }
  st.failures = static_cast<std::int64_t>(events.size());
  if (st.failures > 0) {
    st.mtbf_hours = ratio(st.uptime_hours, st.failures);
    st.mdt_hours = ratio(st.downtime_hours, st.failures);
  }
  st.availability = ratio(st.uptime_hours, st.uptime_hours + st.downtime_hours);
  st.unavailability = 1 - st.availability;
  return st;
}

GroupStats aggregate_stats(std::string scope, std::span<const ReliabilityStats> members) {
  if (members.empty()) throw std::invalid_argument("group '" + scope + "' has no members");
  GroupStats g;
  g.scope = scope;
  g.threshold = members.front().threshold;
  g.members = members.size();
  Rational sum{0};
  auto& p = g.pooled;
  p.scope = std::move(scope);
  p.threshold = g.threshold;
  for (const auto& m : members) {
    sum += m.availability;
    p.uptime_hours += m.uptime_hours;
    p.downtime_hours += m.downtime_hours;
    p.failures += m.failures;
  }
  g.mean_availability = sum / static_cast<std::int64_t>(members.size());
  if (p.failures > 0) {
    p.mtbf_hours = ratio(p.uptime_hours, p.failures);
    p.mdt_hours = ratio(p.downtime_hours, p.failures);
  }
  if (p.uptime_hours + p.downtime_hours > 0) p.availability = ratio(p.uptime_hours, p.uptime_hours + p.downtime_hours);
  p.unavailability = 1 - p.availability;
  return g;
}

std::optional<GroupKey> parse_group_key(std::string_view s) {
  if (s == "unit") return GroupKey::Unit;
  if (s == "isp") return GroupKey::Isp;
  if (s == "technology") return GroupKey::Technology;
  if (s == "tier") return GroupKey::Tier;
  if (s == "year") return GroupKey::Year;
  if (s == "region") return GroupKey::Region;
  return std::nullopt;
}

std::string_view to_string(GroupKey k) {
  switch (k) {
    case GroupKey::Unit: return "unit";
    case GroupKey::Isp: return "isp";
    case GroupKey::Technology: return "technology";
    case GroupKey::Tier: return "tier";
    case GroupKey::Year: return "year";
    case GroupKey::Region: return "region";
  }
  return "unit";
}

std::vector<GroupMember> split_by_group(const std::map<std::string, LossSeries>& series,
                                        std::span<const UnitMeta> units, GroupKey key) {
  std::map<std::string, const UnitMeta*> meta;
  for (const auto& u : units) meta.emplace(u.unit_id, &u);
  std::vector<GroupMember> out;
  for (const auto& [unit_id, s] : series) {
    auto it = meta.find(unit_id);
    if (it == meta.end()) continue;
    const UnitMeta& u = *it->second;
    switch (key) {
      case GroupKey::Unit: out.push_back({u.unit_id, u.unit_id, s}); break;
      case GroupKey::Isp: out.push_back({u.isp, u.unit_id, s}); break;
      case GroupKey::Technology: out.push_back({std::string(to_string(u.technology)), u.unit_id, s}); break;
      case GroupKey::Tier: out.push_back({u.tier(), u.unit_id, s}); break;
      case GroupKey::Region: out.push_back({u.region, u.unit_id, s}); break;
      case GroupKey::Year: {
        std::map<int, LossSeries> by_year;
        for (const auto& sample : s) by_year[utc_year(sample.hour)].push_back(sample);
        for (auto& [year, ys] : by_year) {
          out.push_back({std::to_string(year), u.unit_id + "@" + std::to_string(year), std::move(ys)});
        }
        break;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const GroupMember& a, const GroupMember& b) {
    return std::tie(a.group, a.member_id) < std::tie(b.group, b.member_id);
  });
  return out;
}

LossSeries peak_hour_filter(std::span<const LossSample> series, const TimeZone& tz, PeakWindow window) {
  LossSeries out;
  for (const auto& s : series) {
    int local = tz.local_hour(s.hour);
    if (local >= window.start_hour && local < window.end_hour) out.push_back(s);
  }
  return out;
}

LossSeries peak_hour_filter(std::span<const LossSample> series, const UnitMeta& unit, PeakWindow window) {
  if (unit.timezone.empty()) throw ReliabilityError("no-timezone", "unit " + unit.unit_id + " has no timezone");
  try {
    return peak_hour_filter(series, TimeZone::parse(unit.timezone), window);
  } catch (const TimeError& e) {
    throw ReliabilityError("no-timezone", "unit " + unit.unit_id + ": " + e.what());
  }
}

std::vector<GroupStats> aggregate_by(const std::map<std::string, LossSeries>& series, std::span<const UnitMeta> units,
                                     const AggregateOptions& options, std::vector<std::string>* warnings) {
  for (double t : options.thresholds) check_threshold(t);
  auto members = split_by_group(series, units, options.key);
  std::map<std::string, const UnitMeta*> meta;
  for (const auto& u : units) meta.emplace(u.unit_id, &u);

  if (options.peak_only) {
    std::vector<GroupMember> kept;
    for (auto& m : members) {
      const UnitMeta& u = *meta.at(m.member_id.substr(0, m.member_id.find('@')));
      try {
        m.series = peak_hour_filter(m.series, u, options.peak_window);
        kept.push_back(std::move(m));
      } catch (const ReliabilityError& e) {
        if (warnings) warnings->push_back(e.code() + ": " + e.what());
      }
    }
    members = std::move(kept);
  }

  // stats[member][threshold]; members are independent so split across jobs.
  std::vector<std::vector<std::optional<ReliabilityStats>>> stats(members.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      stats[i].resize(options.thresholds.size());
      if (members[i].series.empty()) continue;
      for (std::size_t t = 0; t < options.thresholds.size(); ++t) {
        stats[i][t] = compute_stats(members[i].series, options.thresholds[t], members[i].member_id);
      }
    }
  };
  std::size_t jobs = static_cast<std::size_t>(std::max(1, options.jobs));
  if (jobs == 1 || members.size() < 2) {
    work(0, members.size());
  } else {
    std::vector<std::jthread> pool;
    std::size_t chunk = (members.size() + jobs - 1) / jobs;
    for (std::size_t b = 0; b < members.size(); b += chunk) {
      pool.emplace_back(work, b, std::min(members.size(), b + chunk));
    }
  }

  std::vector<GroupStats> out;
  std::size_t i = 0;
  std::string prefix = std::string(to_string(options.key)) + "=";
  std::string suffix = options.peak_only ? ";peak" : "";
  while (i < members.size()) {
    std::size_t j = i;
    while (j < members.size() && members[j].group == members[i].group) ++j;
    for (std::size_t t = 0; t < options.thresholds.size(); ++t) {
      std::vector<ReliabilityStats> group;
      for (std::size_t k = i; k < j; ++k) {
        if (stats[k][t]) group.push_back(*stats[k][t]);
      }
      if (group.empty()) continue;
      out.push_back(aggregate_stats(prefix + members[i].group + suffix, group));
    }
    for (std::size_t k = i; k < j; ++k) {
      if (members[k].series.empty() && warnings) {
        warnings->push_back("empty-scope: member " + members[k].member_id + " has no hours in scope");
      }
    }
    i = j;
  }
  return out;
}

std::vector<ProbeOutcome> probes_from_rtts(std::span<const ProbeRtt> probes, double timeout_s) {
  std::vector<ProbeOutcome> out;
  out.reserve(probes.size());
  for (const auto& p : probes) out.push_back({p.t_s, p.rtt_s && *p.rtt_s <= timeout_s});
  return out;
}

Rational windowed_availability(std::span<const ProbeOutcome> probes, double cadence_s, double window_s,
                               double threshold) {
  if (!(cadence_s > 0) || window_s < cadence_s) throw std::invalid_argument("window smaller than probe cadence");
  check_threshold(threshold);
  if (probes.empty()) throw std::invalid_argument("no probes");
  double t0 = probes.front().t_s;
  for (const auto& p : probes) t0 = std::min(t0, p.t_s);
  std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> windows;  // index -> (sent, lost)
  for (const auto& p : probes) {
    auto idx = static_cast<std::int64_t>(std::floor((p.t_s - t0) / window_s));
    auto& w = windows[idx];
    ++w.first;
    if (!p.answered) ++w.second;
  }
  std::int64_t up = 0;
  for (const auto& [_, w] : windows) {
    // lost/sent < threshold, compared without rounding the ratio
    if (static_cast<double>(w.second) < threshold * static_cast<double>(w.first)) ++up;
  }
  return ratio(up, static_cast<std::int64_t>(windows.size()));
}

LossCdf loss_cdf(std::string group, std::span<const double> losses, std::span<const double> thresholds) {
  if (losses.empty()) throw std::invalid_argument("empty loss sample for group " + group);
  LossCdf cdf;
  cdf.group = std::move(group);
  cdf.hours = losses.size();
  std::vector<double> sorted(losses.begin(), losses.end());
  std::sort(sorted.begin(), sorted.end());
  auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.points.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  for (double t : thresholds) {
    auto above = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t);
    cdf.at_or_above.emplace_back(t, ratio(above, static_cast<std::int64_t>(sorted.size())));
  }
  return cdf;
}

std::vector<LossCdf> loss_cdf_by(const std::map<std::string, LossSeries>& series, std::span<const UnitMeta> units,
                                 GroupKey key, std::span<const double> thresholds) {
  std::map<std::string, std::vector<double>> pooled;
  for (const auto& m : split_by_group(series, units, key)) {
    auto& v = pooled[m.group];
    for (const auto& s : m.series) v.push_back(s.loss_rate);
  }
  std::vector<LossCdf> out;
  for (auto& [group, v] : pooled) {
    if (v.empty()) continue;
    out.push_back(loss_cdf(std::string(to_string(key)) + "=" + group, v, thresholds));
  }
  return out;
}

std::string_view to_string(ReachabilityClass c) {
  switch (c) {
    case ReachabilityClass::ReachedLanGateway: return "reached-lan-gateway";
    case ReachabilityClass::ReachedProviderNetwork: return "reached-provider-network";
    case ReachabilityClass::LeftProviderNetwork: return "left-provider-network";
  }
  return "reached-lan-gateway";
}

ReachabilityClass classify_reachability(const TraceObservation& obs) {
  if (obs.destination_reached) throw ReliabilityError("not-a-failure", "traceroute reached its destination");
  for (std::size_t i = 1; i < obs.hops.size(); ++i) {
    if (obs.hops[i].hop_index <= obs.hops[i - 1].hop_index) {
      throw std::invalid_argument("hop indices not strictly increasing");
    }
  }
  bool gateway = false, provider = false, beyond = false;
  for (std::size_t i = 0; i < obs.hops.size(); ++i) {
    const auto& hop = obs.hops[i];
    if (!hop.responded) continue;
    bool is_gateway = obs.gateway_address ? (hop.address && *hop.address == *obs.gateway_address) : i == 0;
    if (is_gateway) {
      gateway = true;
      continue;
    }
    if (!hop.address) continue;
    bool in_provider = std::any_of(obs.provider_prefixes.begin(), obs.provider_prefixes.end(),
                                   [&](const IpPrefix& p) { return p.contains(*hop.address); });
    if (in_provider) {
      provider = true;
    } else {
      beyond = true;
    }
  }
  if (beyond) return ReachabilityClass::LeftProviderNetwork;
  if (provider) return ReachabilityClass::ReachedProviderNetwork;
  if (gateway) return ReachabilityClass::ReachedLanGateway;
  throw ReliabilityError("no-response", "no traceroute hop responded");
}

}  // namespace bbrel
