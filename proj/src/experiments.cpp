#include "bbrel/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace bbrel {

double binom_one_tailed(std::int64_t n, std::int64_t k) {
  if (n < 1) throw std::invalid_argument("binomial test needs n >= 1");
  if (k < 0 || k > n) throw std::invalid_argument("binomial test needs 0 <= k <= n");
  if (k == 0) return 1.0;

  // Terms are scaled by the largest pmf term (at n/2) so the scaled values
  // are the same for every k; summing from n downward then makes the tail
  // nonincreasing in k after rounding.
  const long double ln_n_fact = std::lgamma(static_cast<long double>(n) + 1);
  auto log_choose = [&](std::int64_t j) {
    return ln_n_fact - std::lgamma(static_cast<long double>(j) + 1) -
           std::lgamma(static_cast<long double>(n - j) + 1);
  };
  const long double log_max = log_choose(n / 2);
  long double sum = 0;
  for (std::int64_t j = n; j >= k; --j) {
    long double scaled = std::exp(log_choose(j) - log_max);
    sum += scaled;
  }
  long double log_p = std::log(sum) + log_max - static_cast<long double>(n) * std::log(2.0L);
  double p = static_cast<double>(std::exp(log_p));
  return std::clamp(p, 0.0, 1.0);
}

std::string_view to_string(CohortMetric m) {
  return m == CohortMetric::AvgLossRate ? "avg_loss" : "high_loss_fraction";
}

std::string_view to_string(ComparisonScope s) { return s == ComparisonScope::AllHours ? "all" : "peak_no_loss"; }

bool Interval::contains(double v) const {
  bool above = lower_closed ? v >= lower : v > lower;
  bool below = std::isinf(upper) ? true : (upper_closed ? v <= upper : v < upper);
  return above && below;
}

std::string Interval::to_string() const {
  char buf[96];
  if (std::isinf(upper)) {
    std::snprintf(buf, sizeof buf, "%c%.6g, inf)", lower_closed ? '[' : '(', lower);
  } else {
    std::snprintf(buf, sizeof buf, "%c%.6g, %.6g%c", lower_closed ? '[' : '(', lower, upper, upper_closed ? ']' : ')');
  }
  return buf;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool overlap(const Interval& a, const Interval& b) {
  // a entirely below b?
  auto below = [](const Interval& x, const Interval& y) {
    if (std::isinf(x.upper)) return false;
    if (x.upper < y.lower) return true;
    return x.upper == y.lower && !(x.upper_closed && y.lower_closed);
  };
  return !below(a, b) && !below(b, a);
}

}  // namespace

std::vector<CohortSpec> default_avg_loss_bins() {
  auto m = CohortMetric::AvgLossRate;
  return {
      {m, {0.0, 0.000625, true, false}, "control"},
      {m, {0.005, 0.01, false, true}, "(0.5%,1%]"},
      {m, {0.01, 0.02, false, true}, "(1%,2%]"},
      {m, {0.02, kInf, false, true}, ">2%"},
  };
}

std::vector<CohortSpec> default_high_loss_bins() {
  auto m = CohortMetric::HighLossHourFraction;
  return {
      {m, {0.0, 0.001, true, true}, "[0%,0.1%]"},
      {m, {0.001, 0.005, false, true}, "(0.1%,0.5%]"},
      {m, {0.005, 0.01, false, true}, "(0.5%,1%]"},
      {m, {0.01, 0.10, false, true}, "(1%,10%]"},
      {m, {0.10, kInf, false, true}, ">10%"},
  };
}

void validate_bins(std::span<const CohortSpec> bins) {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto& b = bins[i].bin;
    if (!(b.lower < b.upper)) throw std::invalid_argument("bin '" + bins[i].label + "' has lower >= upper");
    for (std::size_t j = 0; j < i; ++j) {
      if (overlap(b, bins[j].bin)) {
        throw std::invalid_argument("bins '" + bins[j].label + "' and '" + bins[i].label + "' overlap");
      }
      if (bins[i].label == bins[j].label) throw std::invalid_argument("duplicate bin label " + bins[i].label);
    }
  }
}

double mean_loss(std::span<const LossSample> series) {
  if (series.empty()) return 0;
  double sum = 0;
  for (const auto& s : series) sum += s.loss_rate;
  return sum / static_cast<double>(series.size());
}

double high_loss_fraction(std::span<const LossSample> series, double loss_threshold) {
  if (series.empty()) return 0;
  auto n = std::count_if(series.begin(), series.end(), [&](const LossSample& s) { return s.loss_rate > loss_threshold; });
  return static_cast<double>(n) / static_cast<double>(series.size());
}

namespace {

template <typename Metric>
std::map<std::string, CohortSpec> assign(const std::map<std::string, LossSeries>& series,
                                         std::span<const CohortSpec> bins, Metric metric) {
  validate_bins(bins);
  std::map<std::string, CohortSpec> out;
  for (const auto& [unit, s] : series) {
    if (s.empty()) continue;
    double v = metric(s);
    for (const auto& b : bins) {
      if (b.bin.contains(v)) {
        out.emplace(unit, b);
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::map<std::string, CohortSpec> avg_loss_cohorts(const std::map<std::string, LossSeries>& series,
                                                   std::span<const CohortSpec> bins) {
  return assign(series, bins, [](const LossSeries& s) { return mean_loss(s); });
}

std::map<std::string, CohortSpec> high_loss_fraction_cohorts(const std::map<std::string, LossSeries>& series,
                                                             std::span<const CohortSpec> bins,
                                                             double loss_threshold) {
  return assign(series, bins, [&](const LossSeries& s) { return high_loss_fraction(s, loss_threshold); });
}

bool within_tolerance(std::int64_t a, std::int64_t b, double tolerance) {
  auto hi = std::max(a, b);
  if (hi <= 0) return a == b;
  return static_cast<double>(std::llabs(a - b)) <= tolerance * static_cast<double>(hi);
}

std::vector<MatchPair> match_pairs(std::span<const UnitMeta> treatment, std::span<const UnitMeta> control,
                                   double tolerance) {
  std::vector<const UnitMeta*> t;
  for (const auto& u : treatment) t.push_back(&u);
  std::sort(t.begin(), t.end(), [](const UnitMeta* a, const UnitMeta* b) {
    if (a->down_capacity_bps != b->down_capacity_bps) return a->down_capacity_bps > b->down_capacity_bps;
    return a->unit_id < b->unit_id;
  });
  std::vector<bool> used(control.size(), false);
  std::vector<MatchPair> out;
  for (const UnitMeta* tu : t) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < control.size(); ++i) {
      if (used[i]) continue;
      const auto& c = control[i];
      if (c.unit_id == tu->unit_id || c.region != tu->region) continue;
      if (!within_tolerance(tu->down_capacity_bps, c.down_capacity_bps, tolerance) ||
          !within_tolerance(tu->up_capacity_bps, c.up_capacity_bps, tolerance)) {
        continue;
      }
      if (!best) {
        best = i;
        continue;
      }
      auto dist = [&](const UnitMeta& u) { return std::llabs(u.down_capacity_bps - tu->down_capacity_bps); };
      const auto& b = control[*best];
      if (dist(c) < dist(b) || (dist(c) == dist(b) && c.unit_id < b.unit_id)) best = i;
    }
    if (best) {
      used[*best] = true;
      out.push_back({tu->unit_id, control[*best].unit_id});
    }
  }
  if (out.empty()) throw ExperimentError("no-matches", "no treatment unit has an eligible control");
  return out;
}

std::optional<double> mean_demand(std::span<const HourlyRecord> hours, const UnitMeta& unit, ComparisonScope scope,
                                  PeakWindow window) {
  std::optional<TimeZone> tz;
  if (scope == ComparisonScope::PeakNoLoss) {
    try {
      tz = TimeZone::parse(unit.timezone);
    } catch (const TimeError&) {
      return std::nullopt;
    }
  }
  double sum = 0;
  std::size_t n = 0;
  for (const auto& h : hours) {
    if (!h.traffic) continue;
    if (scope == ComparisonScope::PeakNoLoss) {
      if (h.loss_rate != 0) continue;
      int local = tz->local_hour(h.hour_start);
      if (local < window.start_hour || local >= window.end_hour) continue;
    }
    sum += static_cast<double>(h.traffic->total());
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

ExperimentResult make_result(CohortSpec control, CohortSpec treatment, std::size_t pairs, std::size_t h_holds) {
  ExperimentResult r;
  r.control = std::move(control);
  r.treatment = std::move(treatment);
  r.pairs = pairs;
  r.h_holds = h_holds;
  r.matched_pairs = pairs;
  r.h_holds_pct = static_cast<double>(h_holds) / static_cast<double>(pairs);
  r.p_value = binom_one_tailed(static_cast<std::int64_t>(pairs), static_cast<std::int64_t>(h_holds));
  r.significant = r.p_value < kSignificanceLevel;
  r.practically_important = std::abs(r.h_holds_pct - 0.5) > kPracticalDeviation;
  return r;
}

ExperimentResult evaluate_hypothesis(std::span<const MatchPair> pairs,
                                     const std::map<std::string, std::vector<HourlyRecord>>& hours,
                                     const std::map<std::string, UnitMeta>& units, const CohortSpec& control,
                                     const CohortSpec& treatment, ComparisonScope scope, PeakWindow window) {
  static const std::vector<HourlyRecord> kNone;
  auto demand = [&](const std::string& id) -> std::optional<double> {
    auto u = units.find(id);
    if (u == units.end()) return std::nullopt;
    auto h = hours.find(id);
    return mean_demand(h == hours.end() ? kNone : h->second, u->second, scope, window);
  };
  std::size_t used = 0, holds = 0, dropped = 0;
  for (const auto& p : pairs) {
    auto t = demand(p.treatment);
    auto c = demand(p.control);
    if (!t || !c) {
      ++dropped;
      continue;
    }
    ++used;
    if (*t < *c) ++holds;
  }
  if (used == 0) throw ExperimentError("no-matches", "every matched pair has an empty comparison scope");
  auto r = make_result(control, treatment, used, holds);
  r.matched_pairs = pairs.size();
  r.dropped_pairs = dropped;
  return r;
}

ExperimentConfig default_avg_loss_experiment() {
  ExperimentConfig c;
  c.metric = CohortMetric::AvgLossRate;
  c.bins = default_avg_loss_bins();
  for (std::size_t i = 1; i < c.bins.size(); ++i) c.comparisons.emplace_back(c.bins[0].label, c.bins[i].label);
  c.scope = ComparisonScope::AllHours;
  return c;
}

ExperimentConfig default_high_loss_experiment() {
  ExperimentConfig c;
  c.metric = CohortMetric::HighLossHourFraction;
  c.bins = default_high_loss_bins();
  const auto& b = c.bins;
  c.comparisons = {
      {b[2].label, b[3].label}, {b[1].label, b[3].label}, {b[0].label, b[3].label}, {b[3].label, b[4].label},
      {b[2].label, b[4].label}, {b[1].label, b[4].label}, {b[0].label, b[4].label},
  };
  c.scope = ComparisonScope::PeakNoLoss;
  return c;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"metric", "bins", "comparisons", "scope", "tolerance",
                                           "high_loss_threshold", "peak_window"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown experiment key: " + key);
  }
  std::string metric = j.value("metric", std::string("avg_loss"));
  ExperimentConfig c;
  if (metric == "avg_loss") {
    c = default_avg_loss_experiment();
  } else if (metric == "high_loss_fraction") {
    c = default_high_loss_experiment();
  } else {
    throw std::invalid_argument("unknown experiment metric: " + metric);
  }
  if (j.contains("bins")) {
    c.bins.clear();
    for (const auto& b : j.at("bins")) {
      CohortSpec s;
      s.metric = c.metric;
      s.label = b.at("label").get<std::string>();
      s.bin.lower = b.at("lower").get<double>();
      s.bin.upper = b.at("upper").is_null() ? kInf : b.at("upper").get<double>();
      s.bin.lower_closed = b.value("lower_closed", false);
      s.bin.upper_closed = b.value("upper_closed", true);
      c.bins.push_back(std::move(s));
    }
  }
  if (j.contains("comparisons")) {
    c.comparisons.clear();
    for (const auto& p : j.at("comparisons")) {
      c.comparisons.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
  }
  if (j.contains("scope")) {
    auto s = j.at("scope").get<std::string>();
    if (s == "all") {
      c.scope = ComparisonScope::AllHours;
    } else if (s == "peak_no_loss") {
      c.scope = ComparisonScope::PeakNoLoss;
    } else {
      throw std::invalid_argument("unknown experiment scope: " + s);
    }
  }
  c.tolerance = j.value("tolerance", c.tolerance);
  c.high_loss_threshold = j.value("high_loss_threshold", c.high_loss_threshold);
  if (j.contains("peak_window")) {
    c.peak_window.start_hour = j.at("peak_window").at(0).get<int>();
    c.peak_window.end_hour = j.at("peak_window").at(1).get<int>();
  }
  if (!(c.tolerance >= 0 && c.tolerance < 1)) throw std::invalid_argument("tolerance must lie in [0, 1)");
  validate_bins(c.bins);
  for (const auto& [ctl, trt] : c.comparisons) {
    auto has = [&](const std::string& l) {
      return std::any_of(c.bins.begin(), c.bins.end(), [&](const CohortSpec& s) { return s.label == l; });
    };
    if (!has(ctl) || !has(trt)) throw std::invalid_argument("comparison names an unknown bin: " + ctl + " vs " + trt);
  }
  return c;
}

namespace {

nlohmann::json to_json(const CohortSpec& s) {
  nlohmann::json j;
  j["label"] = s.label;
  j["metric"] = std::string(to_string(s.metric));
  j["interval"] = s.bin.to_string();
  j["lower"] = s.bin.lower;
  j["upper"] = std::isinf(s.bin.upper) ? nlohmann::json(nullptr) : nlohmann::json(s.bin.upper);
  j["lower_closed"] = s.bin.lower_closed;
  j["upper_closed"] = s.bin.upper_closed;
  return j;
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["metric"] = std::string(to_string(c.metric));
  j["bins"] = nlohmann::json::array();
  for (const auto& b : c.bins) j["bins"].push_back(to_json(b));
  j["comparisons"] = nlohmann::json::array();
  for (const auto& [a, b] : c.comparisons) j["comparisons"].push_back({a, b});
  j["scope"] = std::string(to_string(c.scope));
  j["tolerance"] = c.tolerance;
  j["high_loss_threshold"] = c.high_loss_threshold;
  j["peak_window"] = {c.peak_window.start_hour, c.peak_window.end_hour};
  return j;
}

nlohmann::json to_json(const ExperimentResult& r) {
  nlohmann::json j;
  j["control"] = to_json(r.control);
  j["treatment"] = to_json(r.treatment);
  j["pairs"] = r.pairs;
  j["h_holds"] = r.h_holds;
  j["h_holds_pct"] = r.h_holds_pct;
  j["p_value"] = r.p_value;
  j["significant"] = r.significant;
  j["practically_important"] = r.practically_important;
  j["matched_pairs"] = r.matched_pairs;
  j["dropped_pairs"] = r.dropped_pairs;
  return j;
}

ExperimentRun run_experiment(const ExperimentConfig& config, const Dataset& data) {
  auto series = data.series();
  auto cohorts = config.metric == CohortMetric::AvgLossRate
                     ? avg_loss_cohorts(series, config.bins)
                     : high_loss_fraction_cohorts(series, config.bins, config.high_loss_threshold);

  std::map<std::string, UnitMeta> units;
  for (const auto& u : data.units) units.emplace(u.unit_id, u);
  std::map<std::string, std::vector<HourlyRecord>> hours;
  for (auto& rec : data.hourly()) hours[rec.unit_id].push_back(std::move(rec));

  auto members = [&](const std::string& label) {
    std::vector<UnitMeta> out;
    for (const auto& [id, spec] : cohorts) {
      if (spec.label == label) out.push_back(units.at(id));
    }
    return out;
  };
  auto spec_of = [&](const std::string& label) {
    return *std::find_if(config.bins.begin(), config.bins.end(), [&](const CohortSpec& s) { return s.label == label; });
  };

  ExperimentRun run;
  for (const auto& [ctl, trt] : config.comparisons) {
    auto control = members(ctl);
    auto treatment = members(trt);
    try {
      auto pairs = match_pairs(treatment, control, config.tolerance);
      run.results.push_back(
          evaluate_hypothesis(pairs, hours, units, spec_of(ctl), spec_of(trt), config.scope, config.peak_window));
    } catch (const ExperimentError& e) {
      run.notes.push_back(e.code() + ": " + ctl + " vs " + trt + " (" + std::to_string(control.size()) +
                          " control, " + std::to_string(treatment.size()) + " treatment units)");
    }
  }
  if (run.results.empty()) throw ExperimentError("no-matches", "no comparison produced matched pairs");
  return run;
}

}  // namespace bbrel
