#include "bbrel/time.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace bbrel {

namespace chr = std::chrono;

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) throw TimeError("truncated timestamp: " + std::string(text));
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + count, value);
  if (ec != std::errc() || ptr != first + count) {
    throw TimeError("bad timestamp: " + std::string(text));
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) throw TimeError("bad timestamp: " + std::string(text));
}

chr::sys_days nth_sunday(chr::year y, chr::month m, unsigned n) {
  return chr::sys_days{chr::year_month_weekday{y, m, chr::Sunday[n]}};
}

chr::sys_days last_sunday(chr::year y, chr::month m) {
  return chr::sys_days{chr::year_month_weekday_last{y, m, chr::Sunday[chr::last]}};
}

struct ZoneEntry {
  std::string_view name;
  int standard_minutes;
  bool us_dst;
};

constexpr std::array<ZoneEntry, 24> kZones{{
    {"America/New_York", -300, true},
    {"America/Detroit", -300, true},
    {"America/Indiana/Indianapolis", -300, true},
    {"America/Kentucky/Louisville", -300, true},
    {"US/Eastern", -300, true},
    {"EST5EDT", -300, true},
    {"America/Chicago", -360, true},
    {"America/Menominee", -360, true},
    {"US/Central", -360, true},
    {"CST6CDT", -360, true},
    {"America/Denver", -420, true},
    {"America/Boise", -420, true},
    {"US/Mountain", -420, true},
    {"MST7MDT", -420, true},
    {"America/Phoenix", -420, false},
    {"US/Arizona", -420, false},
    {"America/Los_Angeles", -480, true},
    {"US/Pacific", -480, true},
    {"PST8PDT", -480, true},
    {"America/Anchorage", -540, true},
    {"US/Alaska", -540, true},
    {"Pacific/Honolulu", -600, false},
    {"US/Hawaii", -600, false},
    {"America/Puerto_Rico", -240, false},
}};

// "+HH", "+HHMM", "+HH:MM", "-H"
bool parse_offset(std::string_view s, int& minutes) {
  if (s.empty() || (s[0] != '+' && s[0] != '-')) return false;
  int sign = s[0] == '-' ? -1 : 1;
  s.remove_prefix(1);
  std::string digits;
  for (char c : s) {
    if (c == ':') continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    digits.push_back(c);
  }
  int h = 0, m = 0;
  if (digits.size() == 1 || digits.size() == 2) {
    h = std::stoi(digits);
  } else if (digits.size() == 3 || digits.size() == 4) {
    h = std::stoi(digits.substr(0, digits.size() - 2));
    m = std::stoi(digits.substr(digits.size() - 2));
  } else {
    return false;
  }
  if (h > 14 || m > 59) return false;
  minutes = sign * (h * 60 + m);
  return true;
}

}  // namespace

Hour parse_hour(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  int y = parse_digits(text, 0, 4);
  expect(text, 4, '-');
  int mo = parse_digits(text, 5, 2);
  expect(text, 7, '-');
  int d = parse_digits(text, 8, 2);
  if (text.size() < 11 || (text[10] != 'T' && text[10] != ' ')) throw TimeError("bad timestamp: " + std::string(text));
  int h = parse_digits(text, 11, 2);
  std::size_t pos = 13;
  for (int field = 0; field < 2 && pos < text.size() && text[pos] == ':'; ++field) {
    int v = parse_digits(text, pos + 1, 2);
    if (v > 59) throw TimeError("bad timestamp: " + std::string(text));
    pos += 3;
  }
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  if (pos < text.size()) {
    if (text.substr(pos) != "Z" && text.substr(pos) != "+00:00") {
      throw TimeError("non-UTC timestamp: " + std::string(text));
    }
  }
  chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)}, chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23) throw TimeError("bad timestamp: " + std::string(text));
  return chr::time_point_cast<chr::hours>(chr::sys_days{ymd}) + chr::hours{h};
}

std::string format_hour(Hour h) {
  auto day = chr::floor<chr::days>(h);
  chr::year_month_day ymd{day};
  auto hh = (h - day).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(hh));
  return buf;
}

int utc_year(Hour h) {
  return static_cast<int>(chr::year_month_day{chr::floor<chr::days>(h)}.year());
}

TimeZone TimeZone::parse(std::string_view name) {
  TimeZone tz;
  tz.name_ = std::string(name);
  if (name.empty()) throw TimeError("no-timezone");
  if (name == "UTC" || name == "GMT" || name == "Etc/UTC" || name == "Z") return tz;
  for (const auto& z : kZones) {
    if (z.name == name) {
      tz.standard_offset_ = chr::minutes{z.standard_minutes};
      tz.us_dst_ = z.us_dst;
      return tz;
    }
  }
  std::string_view rest = name;
  if (rest.starts_with("UTC") || rest.starts_with("GMT")) rest.remove_prefix(3);
  int minutes = 0;
  if (parse_offset(rest, minutes)) {
    tz.standard_offset_ = chr::minutes{minutes};
    return tz;
  }
  throw TimeError("unknown timezone: " + std::string(name));
}

chr::minutes TimeZone::offset_at(chr::sys_seconds t) const {
  if (!us_dst_) return standard_offset_;
  auto y = chr::year_month_day{chr::floor<chr::days>(t)}.year();
  chr::sys_days start_day, end_day;
  if (y >= chr::year{2007}) {
    start_day = nth_sunday(y, chr::March, 2);
    end_day = nth_sunday(y, chr::November, 1);
  } else {
    start_day = nth_sunday(y, chr::April, 1);
    end_day = last_sunday(y, chr::October);
  }
  // Transitions happen at 02:00 local: standard time for the start, daylight time for the end.
  auto start = chr::sys_seconds{start_day} + chr::hours{2} - standard_offset_;
  auto end = chr::sys_seconds{end_day} + chr::hours{2} - (standard_offset_ + chr::hours{1});
  if (t >= start && t < end) return standard_offset_ + chr::hours{1};
  return standard_offset_;
}

int TimeZone::local_hour(Hour h) const {
  auto t = chr::sys_seconds{h};
  auto local = t + offset_at(t);
  auto day = chr::floor<chr::days>(local);
  return static_cast<int>(chr::floor<chr::hours>(local - day).count());
}

}  // namespace bbrel
