#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bbrel/rational.hpp"
#include "json.hpp"

namespace bbrel {

inline constexpr const char* kToolVersion = "1.0.0";

/// Six significant digits, "%g" style ("0.777778", "71.832", "1e-05").
std::string format_number(double v);
std::string format_number(const Rational& v);

/// Empty string for an absent value.
std::string format_optional(const std::optional<Rational>& v);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Hash of the canonical (sorted-key, compact) JSON rendering.
std::string config_hash(const nlohmann::json& config);

/// Pretty-printed with sorted keys and a trailing newline.
std::string dump_json(const nlohmann::json& j);

/// Stages report files as "<name>.tmp" and renames them on commit. Files
/// staged but not committed are removed on destruction, so a failed run
/// leaves no partial outputs.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  ~OutputSet();
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  /// Buffer for the named file's content.
  std::ostringstream& file(const std::string& name);

  /// Writes all staged files; returns their final paths in name order.
  std::vector<std::filesystem::path> commit();

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::ostringstream> files_;
  std::vector<std::filesystem::path> temps_;
  bool committed_ = false;
};

/// Run manifest: command, tool version, config and its hash, SHA-256 of each
/// input, and the list of outputs (excluding the manifest).
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::vector<std::filesystem::path>& inputs,
                             const std::vector<std::string>& outputs);

}  // namespace bbrel
