#include "bbrel/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace bbrel {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

namespace {

bool read_record_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    return true;
  }
  return false;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

CsvReader::CsvReader(std::istream& in, std::string file_name) : in_(in), file_(std::move(file_name)) {
  std::string line;
  if (!read_record_line(in_, line, line_)) throw CsvError(file_, "", file_ + ": missing header row");
  header_ = split_csv_line(line);
  for (std::size_t i = 0; i < header_.size(); ++i) {
    header_[i] = trim(header_[i]);
    index_.emplace(header_[i], i);
  }
}

bool CsvReader::has_column(std::string_view name) const { return index_.contains(std::string(name)); }

void CsvReader::require(std::initializer_list<std::string_view> columns) const {
  for (auto c : columns) {
    if (!has_column(c)) {
      throw CsvError(file_, std::string(c), file_ + ": missing column '" + std::string(c) + "'");
    }
  }
}

bool CsvReader::next(CsvRow& row) {
  std::string line;
  if (!read_record_line(in_, line, line_)) return false;
  row.reader_ = this;
  row.fields_ = split_csv_line(line);
  row.line_ = line_;
  return true;
}

std::optional<std::string_view> CsvRow::optional_str(std::string_view column) const {
  auto it = reader_->index_.find(std::string(column));
  if (it == reader_->index_.end() || it->second >= fields_.size()) return std::nullopt;
  return std::string_view(fields_[it->second]);
}

std::string_view CsvRow::str(std::string_view column) const {
  auto v = optional_str(column);
  if (!v) throw std::invalid_argument("missing field '" + std::string(column) + "'");
  return *v;
}

std::int64_t CsvRow::int64(std::string_view column) const {
  auto s = str(column);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("bad integer in '" + std::string(column) + "': " + std::string(s));
  }
  return v;
}

double CsvRow::real(std::string_view column) const {
  auto s = str(column);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(std::string(s), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::invalid_argument("bad number in '" + std::string(column) + "': " + std::string(s));
  }
  return v;
}

bool CsvRow::boolean(std::string_view column) const {
  std::string s(str(column));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "t" || s == "y") return true;
  if (s == "0" || s == "false" || s == "no" || s == "f" || s == "n") return false;
  throw std::invalid_argument("bad boolean in '" + std::string(column) + "': " + s);
}

}  // namespace bbrel
