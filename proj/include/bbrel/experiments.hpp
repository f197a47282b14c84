#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbrel/core_model.hpp"
#include "bbrel/reliability.hpp"
#include "json.hpp"

namespace bbrel {

class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// P(X >= k) for X ~ Binomial(n, 1/2), summed exactly term by term.
/// Throws std::invalid_argument for n < 1 or k outside [0, n].
double binom_one_tailed(std::int64_t n, std::int64_t k);

inline constexpr double kSignificanceLevel = 0.05;
inline constexpr double kPracticalDeviation = 0.02;

enum class CohortMetric { AvgLossRate, HighLossHourFraction };

std::string_view to_string(CohortMetric m);

struct Interval {
  double lower = 0;
  double upper = std::numeric_limits<double>::infinity();
  bool lower_closed = false;
  bool upper_closed = true;

  bool contains(double v) const;
  std::string to_string() const;
};

struct CohortSpec {
  CohortMetric metric = CohortMetric::AvgLossRate;
  Interval bin;
  std::string label;
};

/// Control [0, 0.0625%) and treatments (0.5%,1%], (1%,2%], (2%,inf).
std::vector<CohortSpec> default_avg_loss_bins();

/// [0,0.1%], (0.1%,0.5%], (0.5%,1%], (1%,10%], (10%,inf).
std::vector<CohortSpec> default_high_loss_bins();

/// Throws std::invalid_argument when a bin is empty or two bins overlap.
void validate_bins(std::span<const CohortSpec> bins);

double mean_loss(std::span<const LossSample> series);

/// Fraction of observed hours with loss strictly above `loss_threshold`.
double high_loss_fraction(std::span<const LossSample> series, double loss_threshold = 0.05);

/// Units whose lifetime mean loss lies in no bin are left out.
std::map<std::string, CohortSpec> avg_loss_cohorts(const std::map<std::string, LossSeries>& series,
                                                   std::span<const CohortSpec> bins);

std::map<std::string, CohortSpec> high_loss_fraction_cohorts(const std::map<std::string, LossSeries>& series,
                                                             std::span<const CohortSpec> bins,
                                                             double loss_threshold = 0.05);

/// |a-b| / max(a,b) <= tolerance.
bool within_tolerance(std::int64_t a, std::int64_t b, double tolerance);

struct MatchPair {
  std::string treatment;
  std::string control;
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

/// Greedy one-to-one matching: treatments in descending download capacity
/// (then unit_id) each take the eligible unused control nearest in download
/// capacity (then unit_id). Eligible = same region and both capacities
/// within tolerance. Throws ExperimentError("no-matches") when nothing pairs.
std::vector<MatchPair> match_pairs(std::span<const UnitMeta> treatment, std::span<const UnitMeta> control,
                                   double tolerance = 0.1);

enum class ComparisonScope { AllHours, PeakNoLoss };

std::string_view to_string(ComparisonScope s);

/// Mean hourly bytes (down + up) over in-scope hours that carry traffic counters.
std::optional<double> mean_demand(std::span<const HourlyRecord> hours, const UnitMeta& unit, ComparisonScope scope,
                                  PeakWindow window = {});

struct ExperimentResult {
  CohortSpec control;
  CohortSpec treatment;
  std::size_t pairs = 0;
  std::size_t h_holds = 0;
  double h_holds_pct = 0;
  double p_value = 1;
  bool significant = false;
  bool practically_important = false;
  std::size_t matched_pairs = 0;
  std::size_t dropped_pairs = 0;  // matched but with an empty comparison scope
};

/// Fills the derived fields from (pairs, h_holds).
ExperimentResult make_result(CohortSpec control, CohortSpec treatment, std::size_t pairs, std::size_t h_holds);

/// H holds for a pair when the treatment unit's mean demand is strictly lower
/// than the control's. Throws ExperimentError("no-matches") when no pair
/// survives scope filtering.
ExperimentResult evaluate_hypothesis(std::span<const MatchPair> pairs,
                                     const std::map<std::string, std::vector<HourlyRecord>>& hours,
                                     const std::map<std::string, UnitMeta>& units, const CohortSpec& control,
                                     const CohortSpec& treatment, ComparisonScope scope, PeakWindow window = {});

struct ExperimentConfig {
  CohortMetric metric = CohortMetric::AvgLossRate;
  std::vector<CohortSpec> bins;
  std::vector<std::pair<std::string, std::string>> comparisons;  // (control label, treatment label)
  ComparisonScope scope = ComparisonScope::AllHours;
  double tolerance = 0.1;
  double high_loss_threshold = 0.05;
  PeakWindow peak_window;
};

/// Consistently-lossy experiment: control vs each treatment, all hours.
ExperimentConfig default_avg_loss_experiment();

/// Frequent-high-loss experiment: the seven control/treatment comparisons,
/// peak hours with no loss.
ExperimentConfig default_high_loss_experiment();

/// Keys: metric ("avg_loss" | "high_loss_fraction"), bins [{label, lower,
/// upper (null = inf), lower_closed, upper_closed}], comparisons [[control,
/// treatment]], scope ("all" | "peak_no_loss"), tolerance,
/// high_loss_threshold. Absent keys take the metric's defaults.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

struct ExperimentRun {
  std::vector<ExperimentResult> results;
  std::vector<std::string> notes;
};

/// Runs every comparison. Comparisons with no eligible pairs are noted and
/// skipped; throws ExperimentError("no-matches") when none produced a result.
ExperimentRun run_experiment(const ExperimentConfig& config, const Dataset& data);

nlohmann::json to_json(const ExperimentResult& r);

}  // namespace bbrel
