#pragma once

// Adaptive thermal comfort (ASHRAE-55 adaptive method) and per-classroom daily
// comfort scores over the school day.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bta/core.hpp"
#include "bta/csv.hpp"
#include "bta/error.hpp"
#include "bta/ingest.hpp"
#include "bta/quality.hpp"
#include "bta/time.hpp"

namespace bta {

enum class Acceptability { Percent80 = 80, Percent90 = 90 };

inline Acceptability parse_acceptability(int percent) {
  if (percent == 80) return Acceptability::Percent80;
  if (percent == 90) return Acceptability::Percent90;
  throw InvalidArgument("acceptability must be 80 or 90, got " + std::to_string(percent));
}

inline int percent_of(Acceptability a) { return static_cast<int>(a); }

// Adaptive model constants.
inline constexpr double kComfortSlope = 0.31;
inline constexpr double kComfortIntercept = 17.8;
inline constexpr double kMinPrevailingMean = 10.0;
inline constexpr double kMaxPrevailingMean = 33.5;

inline double half_width(Acceptability a) { return a == Acceptability::Percent80 ? 3.5 : 2.5; }

struct ComfortBand {
  Date date;
  double t_comfort = 0.0;
  double low = 0.0;
  double high = 0.0;
  Acceptability acceptability = Acceptability::Percent80;
  double airspeed_offset = 0.0;  // already included in `high`

  bool contains(double t) const noexcept { return t >= low && t <= high; }
};

struct PrevailingMean {
  double celsius = 0.0;
  int days_used = 0;
  int lookback_days = 7;
};

/// Mean of the daily mean outdoor temperatures over the `lookback_days` local days
/// before `date`. Days without data are skipped.
inline PrevailingMean prevailing_mean_outdoor(const WeatherHistory& weather, Date date, int lookback_days = 7,
                                              UtcOffset offset = UtcOffset{0}) {
  if (lookback_days < 1) throw InvalidArgument("lookback must be at least one day");
  PrevailingMean out;
  out.lookback_days = lookback_days;
  double sum = 0.0;
  for (int k = 1; k <= lookback_days; ++k) {
    const Date day = add_days(date, -k);
    const auto samples = weather.range(local_midnight(day, offset), local_midnight(next_day(day), offset));
    if (samples.empty()) continue;
    double day_sum = 0.0;
    for (const auto& s : samples) day_sum += s.outdoor_temp_c;
    sum += day_sum / static_cast<double>(samples.size());
    ++out.days_used;
  }
  if (out.days_used == 0) {
    throw ModelInapplicable("no outdoor temperature in the " + std::to_string(lookback_days) + " days before " +
                            format_date(date));
  }
  out.celsius = sum / out.days_used;
  return out;
}

/// Acceptable operative-temperature band for a prevailing mean outdoor temperature.
inline ComfortBand adaptive_band(double t_pmo, Acceptability acceptability, Date date = Date{}) {
  if (!(t_pmo >= kMinPrevailingMean && t_pmo <= kMaxPrevailingMean)) {
    throw ModelInapplicable("prevailing mean outdoor temperature " + csv::format_fixed(t_pmo, 2) +
                            " degC outside the adaptive model's range [10, 33.5]");
  }
  ComfortBand band;
  band.date = date;
  band.acceptability = acceptability;
  band.t_comfort = kComfortSlope * t_pmo + kComfortIntercept;
  band.low = band.t_comfort - half_width(acceptability);
  band.high = band.t_comfort + half_width(acceptability);
  return band;
}

/// Upper-limit increase for elevated air speed, applied as steps at the tabulated speeds.
inline double airspeed_offset(double speed_ms) {
  if (speed_ms < 0.0) throw InvalidArgument("air speed must be non-negative");
  if (speed_ms >= 1.2) return 2.2;
  if (speed_ms >= 0.9) return 1.8;
  if (speed_ms > 0.6) return 1.2;
  return 0.0;
}

/// Raises the upper limit for the given air speed; the lower limit never moves.
inline ComfortBand airspeed_extension(const ComfortBand& band, double speed_ms) {
  ComfortBand out = band;
  const double offset = airspeed_offset(speed_ms);
  out.high = band.high - band.airspeed_offset + offset;
  out.airspeed_offset = offset;
  return out;
}

struct HourSlot {
  Timestamp begin;
  Timestamp end;
};

inline constexpr std::size_t kSchoolHourSlots = 8;

/// Hourly slots tiling [08:30, 16:30) local time on `date`.
inline std::array<HourSlot, kSchoolHourSlots> school_hour_slots(Date date, UtcOffset offset) {
  std::array<HourSlot, kSchoolHourSlots> slots{};
  const Timestamp first = local_midnight(date, offset) + kSchoolDayStart;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    slots[i].begin = first + std::chrono::hours{static_cast<long>(i)};
    slots[i].end = slots[i].begin + std::chrono::hours{1};
  }
  return slots;
}

inline std::optional<double> mean_in(const TimeSeries& series, Timestamp from, Timestamp to) {
  const auto [lo, hi] = index_range(series, from, to);
  if (lo == hi) return std::nullopt;
  std::vector<double> values;
  values.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) values.push_back(series[i].value);
  return detail::bounded_mean(values);
}

/// Whether the mean indoor temperature of the slot lies in the band; nullopt without samples.
inline std::optional<bool> hourly_comfort(const TimeSeries& indoor, const ComfortBand& band, const HourSlot& slot) {
  const auto mean = mean_in(indoor, slot.begin, slot.end);
  if (!mean) return std::nullopt;
  return band.contains(*mean);
}

struct DailyComfortScore {
  std::string room_id;
  Date date;
  std::optional<double> score;  // absent when no hour had data
  int hours_evaluated = 0;
  int hours_in_band = 0;
  double t_pmo = 0.0;
};

struct ComfortConfig {
  Acceptability acceptability = Acceptability::Percent80;
  int lookback_days = 7;
  UtcOffset tz_offset{0};
  bool apply_airspeed = true;
};

/// Fraction of the eight school-day hours whose mean indoor temperature is in the
/// adaptive band. Hours without indoor data are left out of both counts. The band's
/// upper limit is extended per hour by the outdoor wind speed observed in that hour.
inline DailyComfortScore daily_comfort(const std::string& room_id, const TimeSeries& indoor,
                                       const WeatherHistory& weather, Date date, const ComfortConfig& cfg) {
  DailyComfortScore out;
  out.room_id = room_id;
  out.date = date;
  const PrevailingMean pmo = prevailing_mean_outdoor(weather, date, cfg.lookback_days, cfg.tz_offset);
  out.t_pmo = pmo.celsius;
  const ComfortBand base = adaptive_band(pmo.celsius, cfg.acceptability, date);
  for (const auto& slot : school_hour_slots(date, cfg.tz_offset)) {
    ComfortBand band = base;
    if (cfg.apply_airspeed) {
      const auto wind = weather.range(slot.begin, slot.end);
      if (!wind.empty()) {
        double sum = 0.0;
        for (const auto& w : wind) sum += w.wind_speed_ms;
        band = airspeed_extension(base, sum / static_cast<double>(wind.size()));
      }
    }
    const auto in_band = hourly_comfort(indoor, band, slot);
    if (!in_band) continue;
    ++out.hours_evaluated;
    if (*in_band) ++out.hours_in_band;
  }
  if (out.hours_evaluated > 0) {
    out.score = static_cast<double>(out.hours_in_band) / static_cast<double>(out.hours_evaluated);
  }
  return out;
}

struct ScoreDistribution {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

inline std::optional<ScoreDistribution> distribution_of(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  ScoreDistribution d;
  d.count = values.size();
  d.min = values.front();
  d.max = values.back();
  d.q1 = percentile_sorted(values, 0.25);
  d.median = percentile_sorted(values, 0.5);
  d.q3 = percentile_sorted(values, 0.75);
  d.mean = detail::bounded_mean(values);
  return d;
}

struct SiteComfortSummary {
  std::string site_id;
  std::map<std::string, std::vector<DailyComfortScore>> rooms;
  std::optional<ScoreDistribution> distribution;  // over every scored room-day
  std::vector<Date> inapplicable_days;
};

/// Scores every room on every school day (Monday to Friday) in [from, to).
/// Days where the adaptive model does not apply are listed, not scored.
inline SiteComfortSummary site_comfort_summary(const Site& site, const std::map<std::string, TimeSeries>& room_indoor,
                                               const WeatherHistory& weather, Date from, Date to,
                                               ComfortConfig cfg) {
  if (std::chrono::sys_days{from} >= std::chrono::sys_days{to}) throw InvalidArgument("empty comfort period");
  cfg.tz_offset = site.tz_offset;
  SiteComfortSummary out;
  out.site_id = site.site_id;
  std::vector<double> all;
  bool any_data = false;
  for (Date day = from; std::chrono::sys_days{day} < std::chrono::sys_days{to}; day = next_day(day)) {
    if (is_weekend(day)) continue;
    try {
      for (const auto& [room_id, indoor] : room_indoor) {
        auto score = daily_comfort(room_id, indoor, weather, day, cfg);
        if (score.score) {
          all.push_back(*score.score);
          any_data = true;
        }
        out.rooms[room_id].push_back(std::move(score));
      }
    } catch (const ModelInapplicable&) {
      out.inapplicable_days.push_back(day);
    }
  }
  if (!any_data && out.inapplicable_days.empty()) {
    throw AnalysisError("site '" + site.site_id + "': no room has indoor temperature data in the period");
  }
  out.distribution = distribution_of(std::move(all));
  return out;
}

inline constexpr std::string_view kComfortDailyHeader = "site_id,room_id,date,score,hours_evaluated,acceptability,t_pmo";

inline std::string comfort_daily_csv(const SiteComfortSummary& summary, Acceptability acceptability) {
  std::string out;
  for (const auto& [room, scores] : summary.rooms) {
    for (const auto& s : scores) {
      out += summary.site_id + "," + room + "," + format_date(s.date) + "," +
             (s.score ? csv::format_fixed(*s.score, 4) : std::string()) + "," + std::to_string(s.hours_evaluated) +
             "," + std::to_string(percent_of(acceptability)) + "," + csv::format_fixed(s.t_pmo, 3) + "\n";
    }
  }
  return out;
}

}  // namespace bta
