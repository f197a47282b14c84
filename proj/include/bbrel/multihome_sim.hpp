#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "bbrel/core_model.hpp"
#include "bbrel/reliability.hpp"

namespace bbrel {

/// Hour-by-hour minimum of two loss series over the hours both observed.
LossSeries combine(std::span<const LossSample> a, std::span<const LossSample> b);

struct SimPair {
  std::string unit_a;
  std::string unit_b;
  bool same_isp = false;
  std::size_t overlap_hours = 0;
  LossSeries combined;
};

inline constexpr std::size_t kDefaultMinOverlap = 24;

/// Every unordered pair of units in the same block group with at least
/// `min_overlap` commonly observed hours. Units without a block group are
/// skipped. Ordered by (unit_a, unit_b) with unit_a < unit_b.
std::vector<SimPair> build_pairs(const std::map<std::string, LossSeries>& series, std::span<const UnitMeta> units,
                                 std::size_t min_overlap = kDefaultMinOverlap);

enum class MultihomeCohort { NotMultihomed, SameIsp, DifferentIsp };

std::string_view to_string(MultihomeCohort c);

struct MultihomeStats {
  MultihomeCohort cohort = MultihomeCohort::NotMultihomed;
  std::size_t pairs = 0;  // members: single-link series for NotMultihomed
  GroupStats stats;
};

struct MultihomeReport {
  std::vector<MultihomeStats> rows;  // ordered by (cohort, threshold)
  std::vector<std::string> notes;
};

/// The NotMultihomed baseline is each distinct unit appearing in any pair,
/// over its own observed hours. Pairs are unweighted and a unit may appear
/// in several pairs. Empty cohorts are omitted with a note.
MultihomeReport sim_report(std::span<const SimPair> pairs, const std::map<std::string, LossSeries>& series,
                           std::span<const double> thresholds);

}  // namespace bbrel
