#include "bbrel/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace bbrel {

std::string format_number(double v) {
  if (v == 0) return "0";  // avoid "-0"
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_number(const Rational& v) { return format_number(to_double(v)); }

std::string format_optional(const std::optional<Rational>& v) { return v ? format_number(*v) : std::string{}; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string config_hash(const nlohmann::json& config) { return sha256_hex(config.dump()); }

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& t : temps_) std::filesystem::remove(t, ec);
}

std::ostringstream& OutputSet::file(const std::string& name) { return files_[name]; }

std::vector<std::filesystem::path> OutputSet::commit() {
  std::filesystem::create_directories(dir_);
  for (const auto& [name, content] : files_) {
    auto tmp = dir_ / (name + ".tmp");
    temps_.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary);
    out << content.str();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::vector<std::filesystem::path> final_paths;
  for (const auto& [name, _] : files_) {
    auto path = dir_ / name;
    std::filesystem::rename(dir_ / (name + ".tmp"), path);
    final_paths.push_back(path);
  }
  committed_ = true;
  return final_paths;
}

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::vector<std::filesystem::path>& inputs,
                             const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["command"] = command;
  m["tool_version"] = kToolVersion;
  m["config"] = config;
  m["config_hash"] = config_hash(config);
  nlohmann::json in = nlohmann::json::object();
  for (const auto& p : inputs) in[p.filename().string()] = sha256_file(p);
  m["inputs"] = in;
  m["outputs"] = outputs;
  return m;
}

}  // namespace bbrel
