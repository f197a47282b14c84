#include "bbrel/failover_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bbrel {

namespace {

constexpr double kEps = 1e-9;

}  // namespace

bool LinkModel::up_at(double t) const {
  return std::none_of(outages.begin(), outages.end(), [&](const TimeInterval& o) { return t >= o.start && t < o.end; });
}

void LinkModel::validate() const {
  if (capacity_bps < 0) throw std::invalid_argument("link " + name + ": negative capacity");
  for (std::size_t i = 0; i < outages.size(); ++i) {
    if (!(outages[i].end > outages[i].start)) throw std::invalid_argument("link " + name + ": empty outage");
    if (i && outages[i].start < outages[i - 1].end) {
      throw std::invalid_argument("link " + name + ": outages overlap or are unsorted");
    }
  }
}

double effective_capacity(double t, const LinkModel& primary, const LinkModel* secondary,
                          const FailoverPolicy& policy) {
  double extra = policy.switchback ? policy.switchback_delay_s : 0.0;
  for (const auto& o : primary.outages) {
    double detected = o.start + policy.detection_delay_s;
    bool failed_over = secondary && detected < o.end;
    if (t >= o.start && t < o.end) {
      if (t < detected || !secondary) return 0;
      return secondary->up_at(t) ? secondary->capacity_bps : 0;
    }
    if (failed_over && t >= o.end && t < o.end + extra) {
      return secondary->up_at(t) ? secondary->capacity_bps : 0;
    }
  }
  return primary.capacity_bps;
}

double delivered_bits(double t0, double t1, const LinkModel& primary, const LinkModel* secondary,
                      const FailoverPolicy& policy) {
  if (t1 <= t0) return 0;
  std::vector<double> cuts{t0, t1};
  auto add = [&](double x) {
    if (x > t0 && x < t1) cuts.push_back(x);
  };
  double extra = policy.switchback ? policy.switchback_delay_s : 0.0;
  for (const auto& o : primary.outages) {
    add(o.start);
    add(o.start + policy.detection_delay_s);
    add(o.end);
    add(o.end + extra);
  }
  if (secondary) {
    for (const auto& o : secondary->outages) {
      add(o.start);
      add(o.end);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double bits = 0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    double a = cuts[i - 1], b = cuts[i];
    if (b <= a) continue;
    bits += effective_capacity(a, primary, secondary, policy) * (b - a);
  }
  return bits;
}

std::vector<Rung> default_ladder() { return {{"480p", 1.5e6}, {"720p", 3e6}, {"1080p", 6e6}}; }

StepResult step_stream(StreamClient& c, double capacity_bps, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  StepResult r;
  double fill = std::max(0.0, capacity_bps) / c.bitrate_bps();  // media seconds per second
  double room = [&] { return c.buffer_cap_s - c.buffer_s; }();

  if (!c.stalled) {
    double net = fill - 1.0;
    if (net < 0 && c.buffer_s + net * dt <= kEps) {
      double to_empty = c.buffer_s / (1.0 - fill);
      to_empty = std::clamp(to_empty, 0.0, dt);
      r.played_s = to_empty;
      r.stall_offset_s = to_empty;
      r.stalled_s = dt - to_empty;
      r.downloaded_s = fill * dt;
      c.buffer_s = fill * (dt - to_empty);
      c.stalled = true;
    } else {
      r.played_s = dt;
      r.downloaded_s = std::min(fill * dt, room + dt);
      c.buffer_s = std::clamp(c.buffer_s + r.downloaded_s - r.played_s, 0.0, c.buffer_cap_s);
    }
  } else {
    r.stalled_s = dt;
    r.downloaded_s = std::min(fill * dt, room);
    c.buffer_s = std::min(c.buffer_cap_s, c.buffer_s + r.downloaded_s);
  }
  if (c.stalled && !r.stall_offset_s && c.buffer_s >= c.abr.resume_threshold_s) c.stalled = false;

  if (c.abr.enabled) {
    if (c.buffer_s < c.abr.low_watermark_s && c.quality > 0) {
      --c.quality;
    } else if (c.buffer_s > c.abr.high_watermark_s && c.quality + 1 < c.ladder.size() &&
               capacity_bps >= c.abr.upswitch_headroom * c.ladder[c.quality + 1].bitrate_bps) {
      ++c.quality;
    }
  }
  return r;
}

namespace {

LinkModel link_from_json(const nlohmann::json& j) {
  LinkModel l;
  l.name = j.value("name", std::string{});
  l.capacity_bps = j.at("capacity_bps").get<double>();
  if (j.contains("outages")) {
    for (const auto& o : j.at("outages")) l.outages.push_back({o.at(0).get<double>(), o.at(1).get<double>()});
  }
  l.validate();
  return l;
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.primary = link_from_json(j.at("primary"));
  if (j.contains("secondary") && !j.at("secondary").is_null()) s.secondary = link_from_json(j.at("secondary"));
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    s.policy.detection_delay_s = p.value("detection_delay_s", s.policy.detection_delay_s);
    s.policy.switchback = p.value("switchback", s.policy.switchback);
    s.policy.switchback_delay_s = p.value("switchback_delay_s", s.policy.switchback_delay_s);
  }
  if (s.policy.detection_delay_s < 0 || s.policy.switchback_delay_s < 0) {
    throw std::invalid_argument("policy delays must be >= 0");
  }
  if (j.contains("client")) {
    const auto& c = j.at("client");
    auto& cl = s.client;
    cl.buffer_s = c.value("buffer_s", cl.buffer_s);
    cl.buffer_cap_s = c.value("buffer_cap_s", cl.buffer_cap_s);
    if (c.contains("ladder")) {
      cl.ladder.clear();
      for (const auto& r : c.at("ladder")) cl.ladder.push_back({r.at("label").get<std::string>(), r.at("bitrate_bps").get<double>()});
      if (cl.ladder.empty()) throw std::invalid_argument("empty bitrate ladder");
      for (std::size_t i = 1; i < cl.ladder.size(); ++i) {
        if (cl.ladder[i].bitrate_bps <= cl.ladder[i - 1].bitrate_bps) throw std::invalid_argument("ladder not ascending");
      }
    }
    cl.quality = cl.ladder.size() - 1;
    if (c.contains("quality")) {
      auto q = c.at("quality").get<std::string>();
      auto it = std::find_if(cl.ladder.begin(), cl.ladder.end(), [&](const Rung& r) { return r.label == q; });
      if (it == cl.ladder.end()) throw std::invalid_argument("quality not in ladder: " + q);
      cl.quality = static_cast<std::size_t>(it - cl.ladder.begin());
    }
    cl.stalled = c.value("stalled", false);
    cl.abr.enabled = c.value("abr", true);
    cl.abr.resume_threshold_s = c.value("resume_threshold_s", cl.abr.resume_threshold_s);
    cl.abr.low_watermark_s = c.value("low_watermark_s", cl.abr.low_watermark_s);
    cl.abr.high_watermark_s = c.value("high_watermark_s", cl.abr.high_watermark_s);
    cl.abr.upswitch_headroom = c.value("upswitch_headroom", cl.abr.upswitch_headroom);
    if (cl.buffer_s < 0 || cl.buffer_s > cl.buffer_cap_s) throw std::invalid_argument("buffer_s outside [0, cap]");
  }
  s.duration_s = j.value("duration_s", s.duration_s);
  s.dt = j.value("dt", s.dt);
  return s;
}

Trajectory run_scenario(const Scenario& sc) {
  if (!(sc.dt > 0) || !(sc.duration_s > 0)) throw std::invalid_argument("duration and dt must be positive");
  double steps_f = sc.duration_s / sc.dt;
  auto steps = static_cast<std::int64_t>(std::llround(steps_f));
  if (std::abs(steps_f - static_cast<double>(steps)) > 1e-6) throw std::invalid_argument("dt must divide duration");
  sc.primary.validate();
  if (sc.secondary) sc.secondary->validate();

  const LinkModel* secondary = sc.secondary ? &*sc.secondary : nullptr;
  StreamClient client = sc.client;
  Trajectory traj;
  auto& sum = traj.summary;
  traj.samples.reserve(static_cast<std::size_t>(steps) + 1);
  traj.samples.push_back({0.0, effective_capacity(0.0, sc.primary, secondary, sc.policy), client.buffer_s,
                          client.quality, client.stalled});

  std::size_t next_onset = 0;
  for (std::int64_t k = 0; k < steps; ++k) {
    double t = static_cast<double>(k) * sc.dt;
    double t_next = static_cast<double>(k + 1) * sc.dt;
    while (next_onset < sc.primary.outages.size() && sc.primary.outages[next_onset].start < t_next) {
      sum.primary_onsets.push_back({sc.primary.outages[next_onset].start, client.buffer_s});
      ++next_onset;
    }
    double capacity = delivered_bits(t, t_next, sc.primary, secondary, sc.policy) / sc.dt;
    std::size_t quality = client.quality;
    auto step = step_stream(client, capacity, sc.dt);
    if (step.stall_offset_s) {
      ++sum.stall_count;
      sum.stall_times.push_back(t + *step.stall_offset_s);
    }
    sum.stall_seconds += step.stalled_s;
    sum.quality_seconds[client.ladder[quality].label] += step.played_s;
    traj.samples.push_back({t_next, capacity, client.buffer_s, client.quality, client.stalled});
  }
  return traj;
}

namespace {

// Step sums pick up float noise; microsecond resolution is plenty.
double tidy(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

nlohmann::json to_json(const TrajectorySummary& s, const std::vector<Rung>& ladder) {
  nlohmann::json j;
  j["stall_count"] = s.stall_count;
  j["stall_seconds"] = tidy(s.stall_seconds);
  nlohmann::json times = nlohmann::json::array();
  for (double t : s.stall_times) times.push_back(tidy(t));
  j["stall_times"] = times;
  nlohmann::json q = nlohmann::json::object();
  for (const auto& r : ladder) q[r.label] = 0.0;
  for (const auto& [k, v] : s.quality_seconds) q[k] = tidy(v);
  j["quality_seconds"] = q;
  nlohmann::json onsets = nlohmann::json::array();
  for (const auto& o : s.primary_onsets) {
    onsets.push_back({{"onset_s", tidy(o.onset_s)}, {"buffer_s", tidy(o.buffer_s)}});
  }
  j["primary_onsets"] = onsets;
  return j;
}

}  // namespace bbrel
