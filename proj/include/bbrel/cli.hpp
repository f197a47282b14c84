#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bbrel/reliability.hpp"
#include "json.hpp"

namespace bbrel::cli {

/// Process exit codes.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,         // bad flags or configuration
  kMissingInput = 2,  // input file or column absent
  kBadInput = 3,      // input present but unusable
  kNoData = 4,        // empty-scope / no-data
  kNoMatches = 5,     // experiment found no eligible pairs
  kInternal = 6,
};

struct RunConfig {
  std::vector<double> thresholds = kDefaultThresholds;
  PeakWindow peak_window;
  std::size_t min_overlap = 24;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::filesystem::path in_dir = ".";
  std::filesystem::path out_dir = "out";

  nlohmann::json synth = nlohmann::json::object();
  nlohmann::json stats = nlohmann::json::object();
  nlohmann::json experiment = nlohmann::json::object();
  nlohmann::json scenario = nlohmann::json::object();
  nlohmann::json apsurvey = nlohmann::json::object();

  /// Throws std::invalid_argument on unknown keys or invalid values.
  static RunConfig from_json(const nlohmann::json& j);

  /// Everything except paths and jobs; this is what the config hash covers.
  nlohmann::json to_json() const;

  void validate() const;
};

/// Parses `args` (without the program name) and runs one subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace bbrel::cli
