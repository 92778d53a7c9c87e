#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include "bta/error.hpp"

namespace bta {

/// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;
using Minutes = std::chrono::minutes;
using Date = std::chrono::year_month_day;

/// Fixed offset of a site's wall clock from UTC. No daylight-saving table.
using UtcOffset = std::chrono::minutes;

namespace detail {

inline bool parse_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

inline void append_padded(std::string& out, long value, int width) {
  std::string digits = std::to_string(value < 0 ? -value : value);
  if (value < 0) out.push_back('-');
  for (int i = static_cast<int>(digits.size()); i < width; ++i) out.push_back('0');
  out += digits;
}

}  // namespace detail

/// Parses `YYYY-MM-DD`.
inline Date parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !detail::parse_digits(text, 0, 4, y) ||
      !detail::parse_digits(text, 5, 2, m) || !detail::parse_digits(text, 8, 2, d)) {
    throw ParseError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
  return date;
}

/// Parses ISO-8601 UTC of the exact form `YYYY-MM-DDTHH:MM:SSZ`.
inline Timestamp parse_timestamp(std::string_view text) {
  int hh = 0, mm = 0, ss = 0;
  if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' || text[19] != 'Z' ||
      !detail::parse_digits(text, 11, 2, hh) || !detail::parse_digits(text, 14, 2, mm) ||
      !detail::parse_digits(text, 17, 2, ss)) {
    throw ParseError("invalid timestamp '" + std::string(text) + "', expected YYYY-MM-DDTHH:MM:SSZ");
  }
  if (hh > 23 || mm > 59 || ss > 59) throw ParseError("time of day out of range in '" + std::string(text) + "'");
  const Date date = parse_date(text.substr(0, 10));
  return std::chrono::sys_days{date} + std::chrono::hours{hh} + Minutes{mm} + Seconds{ss};
}

inline std::string format_date(Date date) {
  std::string out;
  out.reserve(10);
  detail::append_padded(out, static_cast<int>(date.year()), 4);
  out.push_back('-');
  detail::append_padded(out, static_cast<unsigned>(date.month()), 2);
  out.push_back('-');
  detail::append_padded(out, static_cast<unsigned>(date.day()), 2);
  return out;
}

inline std::string format_timestamp(Timestamp at) {
  const auto day = std::chrono::floor<std::chrono::days>(at);
  const std::chrono::hh_mm_ss tod{at - day};
  std::string out = format_date(Date{day});
  out.push_back('T');
  detail::append_padded(out, tod.hours().count(), 2);
  out.push_back(':');
  detail::append_padded(out, tod.minutes().count(), 2);
  out.push_back(':');
  detail::append_padded(out, tod.seconds().count(), 2);
  out.push_back('Z');
  return out;
}

inline Timestamp start_of_day(Date date) { return std::chrono::sys_days{date}; }

/// UTC instant of local midnight starting `date` at a site with the given offset.
inline Timestamp local_midnight(Date date, UtcOffset offset) { return std::chrono::sys_days{date} - offset; }

/// Wall-clock reading at the site, expressed on the sys_seconds axis.
inline Timestamp to_local(Timestamp at, UtcOffset offset) { return at + offset; }

inline Date local_date(Timestamp at, UtcOffset offset) {
  return Date{std::chrono::floor<std::chrono::days>(to_local(at, offset))};
}

/// Seconds since local midnight.
inline Seconds local_time_of_day(Timestamp at, UtcOffset offset) {
  const Timestamp local = to_local(at, offset);
  return local - std::chrono::floor<std::chrono::days>(local);
}

inline bool is_weekend(Date date) {
  const std::chrono::weekday wd{std::chrono::sys_days{date}};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

inline Date next_day(Date date) { return Date{std::chrono::sys_days{date} + std::chrono::days{1}}; }

inline Date add_days(Date date, int days) { return Date{std::chrono::sys_days{date} + std::chrono::days{days}}; }

}  // namespace bta
