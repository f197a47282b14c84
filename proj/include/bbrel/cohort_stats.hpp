#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbrel/core_model.hpp"

namespace bbrel {

struct RegionIndicator {
  std::string region;
  double urban_fraction = 0;
  double population_density = 0;
  double gsp_per_capita = 0;
};

std::vector<RegionIndicator> read_indicators_csv(std::istream& in, const std::string& file, IngestReport& report);

struct CorrelationResult {
  std::string x_name;
  std::string y_name;
  double r = 0;
  std::size_t n = 0;
};

class DegenerateInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sample Pearson coefficient. Throws DegenerateInput for zero variance and
/// std::invalid_argument for length mismatch or fewer than two points.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y, std::string x_name = "x",
                          std::string y_name = "y");

/// Shannon entropy in bits of a label multiset.
double entropy_bits(std::span<const std::string> labels);

/// One record per unit: attribute name -> value, plus the discretized target.
struct FeatureRecord {
  std::map<std::string, std::string> attributes;
  std::string target;
};

/// H(target) - sum_v p(v) H(target | attribute = v), in bits.
/// Records lacking the attribute are ignored for that attribute.
double information_gain(std::span<const FeatureRecord> records, const std::string& attribute);

struct AttributeGain {
  std::string attribute;
  double gain = 0;
};

/// All attributes present in any record, descending by gain; ties by name.
std::vector<AttributeGain> rank_attributes(std::span<const FeatureRecord> records);

/// Interior cut points at the 25th/50th/75th percentiles (nearest-rank).
std::vector<double> quartile_cuts(std::span<const double> values);

/// Cut points at 1 - t for each threshold, ascending.
std::vector<double> threshold_complement_cuts(std::span<const double> thresholds);

/// Label "b<i>" where i is the number of cuts <= value.
std::string bin_label(double value, std::span<const double> cuts);

/// Power-of-two Mbps bin label, e.g. 50 Mbps -> "32-64Mbps".
std::string capacity_bin(std::int64_t bps);

}  // namespace bbrel
