#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bbrel {

/// UTC wall-clock hour. All telemetry is keyed by the hour it starts in.
using Hour = std::chrono::sys_time<std::chrono::hours>;

class TimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses "YYYY-MM-DD[T ]HH[:MM[:SS]][Z]" and truncates to the hour.
/// Offsets other than Z are rejected; timestamps are stored in UTC.
Hour parse_hour(std::string_view text);

/// "YYYY-MM-DDTHH:00:00Z"
std::string format_hour(Hour h);

int utc_year(Hour h);

/// Local-time conversion for a unit. Supports fixed offsets ("UTC", "UTC-5",
/// "UTC+05:30", "-05:00", "+0530") and the US IANA zones seen in the
/// gateway metadata, with US daylight-saving rules.
class TimeZone {
 public:
  static TimeZone parse(std::string_view name);

  const std::string& name() const { return name_; }

  std::chrono::minutes offset_at(std::chrono::sys_seconds t) const;

  /// Local hour-of-day (0..23) at which the given UTC hour starts.
  int local_hour(Hour h) const;

 private:
  std::string name_;
  std::chrono::minutes standard_offset_{0};
  bool us_dst_ = false;
};

}  // namespace bbrel
