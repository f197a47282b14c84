#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bbrel {

/// Raised for structural problems (missing file, missing column). Bad values
/// inside a row are reported per row by the ingest layer instead.
class CsvError : public std::runtime_error {
 public:
  CsvError(std::string file, std::string column, const std::string& what)
      : std::runtime_error(what), file_(std::move(file)), column_(std::move(column)) {}
  const std::string& file() const { return file_; }
  const std::string& column() const { return column_; }

 private:
  std::string file_;
  std::string column_;
};

class CsvRow;

/// Header-driven CSV reader. Supports double-quoted fields; lines starting
/// with '#' are comments.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string file_name);

  /// Fails with CsvError naming the file and column when a column is absent.
  void require(std::initializer_list<std::string_view> columns) const;
  bool has_column(std::string_view name) const;

  bool next(CsvRow& row);

  const std::string& file_name() const { return file_; }

 private:
  friend class CsvRow;
  std::istream& in_;
  std::string file_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t line_ = 0;
};

class CsvRow {
 public:
  std::size_t line() const { return line_; }

  /// Throws std::invalid_argument with the column name when the field is absent.
  std::string_view str(std::string_view column) const;
  std::int64_t int64(std::string_view column) const;
  double real(std::string_view column) const;
  bool boolean(std::string_view column) const;
  std::optional<std::string_view> optional_str(std::string_view column) const;

 private:
  friend class CsvReader;
  const CsvReader* reader_ = nullptr;
  std::vector<std::string> fields_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_csv_line(std::string_view line);

/// Writes one CSV record, quoting fields that need it.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace bbrel
