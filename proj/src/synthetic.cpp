#include "bbrel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace bbrel {

namespace {

// std distributions are implementation-defined; draw from raw engine output
// so traces are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  template <typename T>
  std::size_t weighted(const std::vector<T>& items) {
    double total = 0;
    for (const auto& it : items) total += it.weight;
    double r = uniform() * total;
    for (std::size_t i = 0; i < items.size(); ++i) {
      r -= items[i].weight;
      if (r < 0) return i;
    }
    return items.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

std::int64_t lost_for_rate(double rate, std::int64_t sent) {
  auto lost = static_cast<std::int64_t>(std::ceil(rate * static_cast<double>(sent) - 1e-9));
  lost = std::clamp<std::int64_t>(lost, 0, sent);
  while (lost < sent && static_cast<double>(lost) / static_cast<double>(sent) < rate) ++lost;
  return lost;
}

double expected_loss(const LossProfile& p) { return p.p_lossy_hour * 0.5 * (p.loss_min + p.loss_max); }

}  // namespace

SynthSpec SynthSpec::defaults() {
  SynthSpec s;
  s.isps = {
      {"Comcast", Technology::Cable, 3, {{25000, 5000}, {50000, 10000}, {105000, 10000}}},
      {"AT&T", Technology::DSL, 2, {{6000, 768}, {18000, 1500}}},
      {"Verizon (Fiber)", Technology::Fiber, 2, {{50000, 25000}, {75000, 35000}}},
      {"Hughes", Technology::Satellite, 1, {{15000, 2000}}},
  };
  s.regions = {
      {"IL", "America/Chicago"},
      {"NY", "America/New_York"},
      {"CA", "America/Los_Angeles"},
  };
  s.loss_profiles = {
      {"clean", 4, 0.0, 0.0, 0.0},
      {"light", 2, 0.02, 0.01, 0.05},
      {"moderate", 1, 0.25, 0.02, 0.04},
      {"lossy", 2, 0.3, 0.02, 0.05},
      {"bad", 1, 0.5, 0.04, 0.2},
      {"spiky-rare", 2, 0.003, 0.06, 0.3},
      {"spiky", 2, 0.008, 0.06, 0.3},
      {"spiky-often", 2, 0.04, 0.06, 0.3},
  };
  return s;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s = SynthSpec::defaults();
  static const std::set<std::string> known{
      "units",         "hours",          "start",          "seed",
      "targets",       "probes_per_target", "p_missing_hour", "isps",
      "regions",       "blocks_per_region", "loss_profiles", "outages",
      "mean_bytes_per_hour", "loss_sensitivity", "test_bytes_per_hour", "dns_queries_per_server",
      "p_dns_single_failure", "p_dns_double_failure", "emit_traffic", "emit_dns"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown synth key: " + key);
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("units", s.units);
  get("hours", s.hours);
  if (j.contains("start")) s.start = parse_hour(j.at("start").get<std::string>());
  get("seed", s.seed);
  get("targets", s.targets);
  get("probes_per_target", s.probes_per_target);
  get("p_missing_hour", s.p_missing_hour);
  get("blocks_per_region", s.blocks_per_region);
  get("mean_bytes_per_hour", s.mean_bytes_per_hour);
  get("loss_sensitivity", s.loss_sensitivity);
  get("test_bytes_per_hour", s.test_bytes_per_hour);
  get("dns_queries_per_server", s.dns_queries_per_server);
  get("p_dns_single_failure", s.p_dns_single_failure);
  get("p_dns_double_failure", s.p_dns_double_failure);
  get("emit_traffic", s.emit_traffic);
  get("emit_dns", s.emit_dns);
  if (j.contains("isps")) {
    s.isps.clear();
    for (const auto& e : j.at("isps")) {
      IspProfile p;
      p.name = e.at("name").get<std::string>();
      auto tech = parse_technology(e.at("technology").get<std::string>());
      if (!tech) throw std::invalid_argument("bad technology in synth isps");
      p.technology = *tech;
      p.weight = e.value("weight", 1.0);
      for (const auto& t : e.at("tiers_kbps")) p.tiers_kbps.emplace_back(t.at(0).get<std::int64_t>(), t.at(1).get<std::int64_t>());
      s.isps.push_back(std::move(p));
    }
  }
  if (j.contains("regions")) {
    s.regions.clear();
    for (const auto& e : j.at("regions")) {
      s.regions.push_back({e.at("name").get<std::string>(), e.at("timezone").get<std::string>()});
    }
  }
  if (j.contains("loss_profiles")) {
    s.loss_profiles.clear();
    for (const auto& e : j.at("loss_profiles")) {
      s.loss_profiles.push_back({e.value("name", std::string{}), e.value("weight", 1.0), e.at("p_lossy_hour").get<double>(),
                                 e.value("loss_min", 0.0), e.value("loss_max", 0.0)});
    }
  }
  if (j.contains("outages")) {
    s.outages.clear();
    for (const auto& e : j.at("outages")) {
      s.outages.push_back({e.at("unit_index").get<std::size_t>(), e.at("start_hour").get<std::int64_t>(),
                           e.at("duration").get<std::int64_t>(), e.at("loss_rate").get<double>()});
    }
  }
  return s;
}

SynthOutput generate_synthetic(const SynthSpec& spec) {
  if (spec.hours <= 0) throw std::invalid_argument("synthetic trace needs hours > 0");
  if (spec.units <= 0) throw std::invalid_argument("synthetic trace needs units > 0");
  if (spec.targets <= 0 || spec.probes_per_target <= 0) throw std::invalid_argument("synthetic trace needs probes");
  if (spec.isps.empty() || spec.regions.empty() || spec.loss_profiles.empty()) {
    throw std::invalid_argument("synthetic trace needs isps, regions and loss profiles");
  }
  for (const auto& isp : spec.isps) {
    if (isp.tiers_kbps.empty()) throw std::invalid_argument("isp without tiers: " + isp.name);
  }
  for (const auto& o : spec.outages) {
    if (o.unit_index >= static_cast<std::size_t>(spec.units) || o.duration < 1 || o.start_hour < 0 ||
        o.start_hour + o.duration > spec.hours || o.loss_rate < 0 || o.loss_rate > 1) {
      throw std::invalid_argument("outage injection out of range");
    }
  }

  Rng rng(spec.seed);
  SynthOutput out;
  std::vector<const LossProfile*> profile_of;

  for (int i = 0; i < spec.units; ++i) {
    UnitMeta u;
    char id[16];
    std::snprintf(id, sizeof id, "u%04d", i + 1);
    u.unit_id = id;
    const auto& isp = spec.isps[rng.weighted(spec.isps)];
    u.isp = isp.name;
    u.technology = isp.technology;
    auto tier = isp.tiers_kbps[rng.index(isp.tiers_kbps.size())];
    u.down_capacity_bps = tier.first * 1000;
    u.up_capacity_bps = tier.second * 1000;
    const auto& region = spec.regions[rng.index(spec.regions.size())];
    u.region = region.name;
    u.timezone = region.timezone;
    u.block_group = region.name + "-B" + std::to_string(rng.index(static_cast<std::size_t>(std::max(1, spec.blocks_per_region))) + 1);
    u.active = true;
    out.units.push_back(std::move(u));
    profile_of.push_back(&spec.loss_profiles[rng.weighted(spec.loss_profiles)]);
  }

  std::vector<std::vector<double>> forced(static_cast<std::size_t>(spec.units),
                                          std::vector<double>(static_cast<std::size_t>(spec.hours), -1.0));
  for (const auto& o : spec.outages) {
    for (std::int64_t h = o.start_hour; h < o.start_hour + o.duration; ++h) {
      forced[o.unit_index][static_cast<std::size_t>(h)] = o.loss_rate;
    }
  }

  for (std::size_t ui = 0; ui < out.units.size(); ++ui) {
    const auto& unit = out.units[ui];
    const auto& profile = *profile_of[ui];
    double lossiness = std::min(1.0, expected_loss(profile) / 0.02);
    double demand = spec.mean_bytes_per_hour * rng.uniform(0.6, 1.4) * (1.0 - spec.loss_sensitivity * lossiness);
    for (std::int64_t h = 0; h < spec.hours; ++h) {
      Hour hour = spec.start + std::chrono::hours{h};
      double forced_rate = forced[ui][static_cast<std::size_t>(h)];
      if (forced_rate < 0 && rng.bernoulli(spec.p_missing_hour)) continue;

      double rate = 0;
      if (forced_rate >= 0) {
        rate = forced_rate;
      } else if (rng.bernoulli(profile.p_lossy_hour)) {
        rate = rng.uniform(profile.loss_min, profile.loss_max);
      }
      std::size_t min_target = rng.index(static_cast<std::size_t>(spec.targets));
      std::int64_t base_lost = lost_for_rate(rate, spec.probes_per_target);
      for (int t = 0; t < spec.targets; ++t) {
        PingHourRaw p;
        p.unit_id = unit.unit_id;
        p.hour_start = hour;
        p.target = "target" + std::to_string(t + 1);
        p.probes_sent = spec.probes_per_target;
        std::int64_t lost = base_lost;
        if (forced_rate < 0 && static_cast<std::size_t>(t) != min_target) {
          lost = std::min(spec.probes_per_target, lost + static_cast<std::int64_t>(rng.index(3)));
        }
        p.probes_lost = lost;
        out.pings.push_back(std::move(p));
      }

      if (spec.emit_traffic) {
        int local = 0;
        try {
          local = TimeZone::parse(unit.timezone).local_hour(hour);
        } catch (const TimeError&) {
        }
        double diurnal = 0.4 + 1.2 * std::pow(std::sin(3.14159265358979 * local / 24.0), 2);
        double volume = demand * diurnal * rng.uniform(0.5, 1.5) * (1.0 - 0.5 * std::min(1.0, rate * 5));
        auto down = static_cast<std::int64_t>(volume * 0.85);
        auto up = static_cast<std::int64_t>(volume * 0.15);
        auto test_down = static_cast<std::int64_t>(static_cast<double>(spec.test_bytes_per_hour) * rng.uniform(0.5, 1.5));
        auto test_up = test_down / 4;
        out.traffic.push_back({unit.unit_id, hour, down + test_down, up + test_up, test_down, test_up, 0});
      }

      if (spec.emit_dns) {
        bool both = rng.bernoulli(spec.p_dns_double_failure);
        bool one = !both && rng.bernoulli(spec.p_dns_single_failure);
        std::size_t failing = one ? rng.index(2) : 2;
        for (std::size_t s = 0; s < 2; ++s) {
          DnsHourRaw d;
          d.unit_id = unit.unit_id;
          d.hour_start = hour;
          d.role = s == 0 ? DnsRole::Primary : DnsRole::Secondary;
          d.queries = spec.dns_queries_per_server;
          bool down = both || failing == s;
          d.failures = down ? d.queries : (rng.bernoulli(0.01) ? std::min<std::int64_t>(1, d.queries) : 0);
          out.dns.push_back(std::move(d));
        }
      }
    }
  }

  IngestReport scratch;
  auto loss = ingest_pings(out.pings, scratch);
  auto traffic = ingest_traffic(out.traffic, scratch);
  auto dns = ingest_dns(out.dns, scratch);
  out.hourly = assemble_hourly(loss, traffic, dns);
  return out;
}

std::vector<std::filesystem::path> write_synthetic(const SynthOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto open = [&](const char* name) {
    auto path = dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    written.push_back(path);
    return f;
  };
  {
    auto f = open("units.csv");
    write_units_csv(f, out.units);
  }
  {
    auto f = open("pings.csv");
    write_pings_csv(f, out.pings);
  }
  if (!out.traffic.empty()) {
    auto f = open("traffic.csv");
    write_traffic_csv(f, out.traffic);
  }
  if (!out.dns.empty()) {
    auto f = open("dns.csv");
    write_dns_csv(f, out.dns);
  }
  return written;
}

}  // namespace bbrel
