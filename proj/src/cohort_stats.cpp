#include "bbrel/cohort_stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bbrel/csv.hpp"

namespace bbrel {

std::vector<RegionIndicator> read_indicators_csv(std::istream& in, const std::string& file, IngestReport& report) {
  CsvReader reader(in, file);
  reader.require({"region", "urban_fraction", "pop_density", "gsp_per_capita"});
  std::vector<RegionIndicator> out;
  CsvRow row;
  while (reader.next(row)) {
    try {
      RegionIndicator r{std::string(row.str("region")), row.real("urban_fraction"), row.real("pop_density"),
                        row.real("gsp_per_capita")};
      if (r.urban_fraction < 0 || r.urban_fraction > 1 || r.population_density < 0 || r.gsp_per_capita < 0) {
        throw std::invalid_argument("indicator out of range");
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      report.reject(file, row.line(), "malformed", e.what());
    }
  }
  return out;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y, std::string x_name,
                          std::string y_name) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least two points");
  auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw DegenerateInput("degenerate");
  double r = sxy / std::sqrt(sxx * syy);
  return {std::move(x_name), std::move(y_name), std::clamp(r, -1.0, 1.0), x.size()};
}

double entropy_bits(std::span<const std::string> labels) {
  if (labels.empty()) return 0;
  std::map<std::string_view, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  double h = 0;
  auto n = static_cast<double>(labels.size());
  for (const auto& [_, c] : counts) {
    double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double information_gain(std::span<const FeatureRecord> records, const std::string& attribute) {
  std::vector<std::string> all;
  std::map<std::string, std::vector<std::string>> by_value;
  for (const auto& r : records) {
    auto it = r.attributes.find(attribute);
    if (it == r.attributes.end()) continue;
    all.push_back(r.target);
    by_value[it->second].push_back(r.target);
  }
  if (all.empty()) return 0;
  double h = entropy_bits(all);
  double conditional = 0;
  auto n = static_cast<double>(all.size());
  for (const auto& [_, targets] : by_value) {
    conditional += static_cast<double>(targets.size()) / n * entropy_bits(targets);
  }
  // Rounding can leave a residue of either sign near the bounds.
  return std::clamp(h - conditional, 0.0, h);
}

std::vector<AttributeGain> rank_attributes(std::span<const FeatureRecord> records) {
  std::set<std::string> names;
  for (const auto& r : records) {
    for (const auto& [k, _] : r.attributes) names.insert(k);
  }
  std::vector<AttributeGain> out;
  for (const auto& name : names) out.push_back({name, information_gain(records, name)});
  std::stable_sort(out.begin(), out.end(), [](const AttributeGain& a, const AttributeGain& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    return a.attribute < b.attribute;
  });
  return out;
}

std::vector<double> quartile_cuts(std::span<const double> values) {
  if (values.empty()) return {};
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::vector<double> cuts;
  for (double q : {0.25, 0.5, 0.75}) {
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    double cut = v[std::max<std::size_t>(rank, 1) - 1];
    if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
  }
  return cuts;
}

std::vector<double> threshold_complement_cuts(std::span<const double> thresholds) {
  std::vector<double> cuts;
  for (double t : thresholds) cuts.push_back(1.0 - t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

std::string bin_label(double value, std::span<const double> cuts) {
  auto idx = std::upper_bound(cuts.begin(), cuts.end(), value) - cuts.begin();
  return "b" + std::to_string(idx);
}

std::string capacity_bin(std::int64_t bps) {
  double mbps = static_cast<double>(bps) / 1e6;
  if (mbps < 1) return "<1Mbps";
  int e = static_cast<int>(std::floor(std::log2(mbps)));
  long lo = 1L << e;
  return std::to_string(lo) + "-" + std::to_string(lo * 2) + "Mbps";
}

}  // namespace bbrel
