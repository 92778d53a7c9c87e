#pragma once

// Weekend thermal-performance analysis: daily swings, solar-gain correlation
// against orientation and cloud cover, and window-opening style temperature drops.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bta/core.hpp"
#include "bta/csv.hpp"
#include "bta/error.hpp"
#include "bta/ingest.hpp"
#include "bta/time.hpp"

namespace bta {

struct DailySwing {
  std::string room_id;
  Date date;
  double min_c = 0.0;
  double max_c = 0.0;
  double swing = 0.0;
  double rise_hours = 0.0;  // from the last lowest reading before the daily maximum to that maximum
};

struct SwingResult {
  std::vector<DailySwing> swings;
  std::vector<Date> skipped;  // weekend days with too few samples
};

inline constexpr std::size_t kMinSwingSamples = 12;

/// One swing per local weekend day that has at least `min_samples` samples.
inline SwingResult weekend_daily_swings(const std::string& room_id, const TimeSeries& series, UtcOffset offset,
                                        std::size_t min_samples = kMinSwingSamples) {
  SwingResult out;
  std::size_t i = 0;
  const auto s = series.samples();
  while (i < s.size()) {
    const Date day = local_date(s[i].at, offset);
    std::size_t j = i;
    while (j < s.size() && local_date(s[j].at, offset) == day) ++j;
    if (is_weekend(day)) {
      if (j - i < min_samples) {
        out.skipped.push_back(day);
      } else {
        std::size_t imax = i, imin = i;
        for (std::size_t k = i; k < j; ++k) {
          if (s[k].value > s[imax].value) imax = k;
          if (s[k].value < s[imin].value) imin = k;
        }
        std::size_t rise_from = i;
        for (std::size_t k = i; k <= imax; ++k) {
          if (s[k].value <= s[rise_from].value) rise_from = k;
        }
        DailySwing d;
        d.room_id = room_id;
        d.date = day;
        d.min_c = s[imin].value;
        d.max_c = s[imax].value;
        d.swing = d.max_c - d.min_c;
        d.rise_hours = static_cast<double>((s[imax].at - s[rise_from].at).count()) / 3600.0;
        out.swings.push_back(d);
      }
    }
    i = j;
  }
  return out;
}

enum class AnomalyKind { PoorInsulation, UnshadedSolarGain, OccupantEvent };

inline std::string_view to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::PoorInsulation: return "PoorInsulation";
    case AnomalyKind::UnshadedSolarGain: return "UnshadedSolarGain";
    case AnomalyKind::OccupantEvent: return "OccupantEvent";
  }
  return "?";
}

struct Evidence {
  Date date;
  double value = 0.0;
};

/// A flagged classroom. Always carries at least one dated evidence item.
struct AnomalyReport {
  std::string site_id;
  std::string room_id;
  AnomalyKind kind = AnomalyKind::PoorInsulation;
  std::string metric;
  double value = 0.0;
  std::vector<Evidence> evidence;
};

/// Flags a room when at least `min_days` weekend days swing by `threshold` degC or more.
inline std::optional<AnomalyReport> flag_poor_insulation(std::span<const DailySwing> swings, double threshold,
                                                         std::size_t min_days) {
  if (!(threshold > 0.0)) throw InvalidArgument("swing threshold must be positive");
  AnomalyReport report;
  report.kind = AnomalyKind::PoorInsulation;
  report.metric = "max_swing_c";
  for (const auto& d : swings) {
    if (d.swing >= threshold) {
      report.room_id = d.room_id;
      report.evidence.push_back({d.date, d.swing});
      report.value = std::max(report.value, d.swing);
    }
  }
  if (report.evidence.empty() || report.evidence.size() < min_days) return std::nullopt;
  return report;
}

// ---------------------------------------------------------------------------
// Solar gain

struct OrientationProfile {
  double peak_shift_hours = 0.0;  // relative to local solar noon
  double amplitude = 0.0;
};

using OrientationGainTable = std::array<OrientationProfile, 8>;

// Indexed like Orientation: N, NE, E, SE, S, SW, W, NW.
inline constexpr OrientationGainTable kDefaultOrientationGain = {{
    {0.0, 0.0},
    {-5.0, 0.3},
    {-4.0, 0.8},
    {-2.0, 1.0},
    {0.0, 1.0},
    {2.0, 1.0},
    {4.0, 0.8},
    {5.0, 0.3},
}};

inline constexpr double kSolarNoonHour = 12.0;
inline constexpr double kDaylightHours = 12.0;

/// Half-sine daylight template for a facade, peaking at noon shifted per orientation.
inline double orientation_gain(double local_hour, Orientation orientation,
                               const OrientationGainTable& table = kDefaultOrientationGain) {
  const auto& p = table[static_cast<std::size_t>(orientation)];
  const double rise = kSolarNoonHour + p.peak_shift_hours - kDaylightHours / 2.0;
  const double x = std::fmod(std::fmod(local_hour - rise, 24.0) + 24.0, 24.0);
  if (x >= kDaylightHours) return 0.0;
  return p.amplitude * std::sin(std::numbers::pi * x / kDaylightHours);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw AnalysisError("correlation undefined: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

struct CorrelationReport {
  std::string room_id;
  Orientation orientation = Orientation::S;
  double r = 0.0;
  std::size_t samples = 0;
  std::vector<Evidence> evidence;  // per weekend day: largest hourly rise
};

inline constexpr std::size_t kMinCorrelationHours = 24;

/// Pearson correlation, over weekend hours, between the hourly rise of mean indoor
/// temperature and the clear-sky solar proxy (1 - cloud cover) * orientation gain.
inline CorrelationReport solar_gain_correlation(const std::string& room_id, const TimeSeries& series,
                                                const WeatherHistory& weather, Orientation orientation,
                                                UtcOffset offset,
                                                const OrientationGainTable& table = kDefaultOrientationGain) {
  // Local hour index -> (sum, count) for weekend hours.
  std::map<long, std::pair<double, std::size_t>> hours;
  for (const auto& s : series) {
    if (!is_weekend(local_date(s.at, offset))) continue;
    const long h = std::chrono::floor<std::chrono::hours>(to_local(s.at, offset)).time_since_epoch().count();
    auto& slot = hours[h];
    slot.first += s.value;
    ++slot.second;
  }
  std::vector<double> rises, proxies;
  std::map<int, Evidence> per_day;
  for (auto it = hours.begin(); it != hours.end(); ++it) {
    const auto prev = hours.find(it->first - 1);
    if (prev == hours.end()) continue;
    const Timestamp local_begin{std::chrono::hours{it->first}};
    const Timestamp utc_begin = local_begin - offset;
    const WeatherSample* w = weather.nearest(utc_begin, Seconds{1800});
    if (w == nullptr) continue;
    const double rise = it->second.first / static_cast<double>(it->second.second) -
                        prev->second.first / static_cast<double>(prev->second.second);
    const double hour_of_day = static_cast<double>(((it->first % 24) + 24) % 24);
    rises.push_back(rise);
    proxies.push_back((1.0 - w->cloud_cover) * orientation_gain(hour_of_day, orientation, table));
    const Date day{std::chrono::floor<std::chrono::days>(local_begin)};
    const int key = static_cast<int>(std::chrono::sys_days{day}.time_since_epoch().count());
    auto [slot, inserted] = per_day.try_emplace(key, Evidence{day, rise});
    if (!inserted) slot->second.value = std::max(slot->second.value, rise);
  }
  if (rises.size() < kMinCorrelationHours) {
    throw AnalysisError("room '" + room_id + "': only " + std::to_string(rises.size()) +
                        " weekend hours overlap with weather data (need " + std::to_string(kMinCorrelationHours) + ")");
  }
  CorrelationReport out;
  out.room_id = room_id;
  out.orientation = orientation;
  out.samples = rises.size();
  out.r = pearson(rises, proxies);
  for (auto& [key, ev] : per_day) out.evidence.push_back(ev);
  return out;
}

/// Rooms with r >= r_threshold, strongest correlation first.
inline std::vector<AnomalyReport> flag_unshaded_rooms(std::span<const CorrelationReport> reports, double r_threshold) {
  std::vector<const CorrelationReport*> hits;
  for (const auto& r : reports) {
    if (r.r >= r_threshold && !r.evidence.empty()) hits.push_back(&r);
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto* a, const auto* b) { return a->r > b->r; });
  std::vector<AnomalyReport> out;
  for (const auto* h : hits) {
    out.push_back({"", h->room_id, AnomalyKind::UnshadedSolarGain, "solar_correlation_r", h->r, h->evidence});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Occupant events

struct EventConfig {
  double drop_c = 2.0;
  Minutes within{30};
  Seconds recovery_horizon = std::chrono::hours{2};
  double recovery_fraction = 0.5;
  // The reading must stay below the midpoint of the fall this long; short dips
  // left by outlier replacement are not window openings.
  Seconds min_dip{300};
};

struct OccupantEvent {
  Timestamp start;    // pre-drop peak
  Timestamp trough;
  Timestamp recovered;
  double fall = 0.0;
};

/// Drops of at least `drop_c` within `within` that recover by `recovery_fraction`
/// of the fall inside `recovery_horizon`. Slow declines and unrecovered falls
/// (weather fronts) are ignored.
inline std::vector<OccupantEvent> detect_occupant_events(const TimeSeries& series, const EventConfig& cfg = {}) {
  std::vector<OccupantEvent> events;
  const auto s = series.samples();
  const Seconds within = cfg.within;
  std::size_t lo = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    while (s[lo].at < s[i].at - within) ++lo;
    double peak = s[lo].value;
    for (std::size_t k = lo; k <= i; ++k) peak = std::max(peak, s[k].value);
    if (peak - s[i].value < cfg.drop_c) {
      ++i;
      continue;
    }
    // Deepest point reachable within the drop horizon.
    std::size_t trough = i;
    for (std::size_t k = i; k < s.size() && s[k].at <= s[i].at + within; ++k) {
      if (s[k].value < s[trough].value) trough = k;
    }
    std::size_t peak_idx = trough;
    for (std::size_t k = trough + 1; k-- > 0 && s[k].at >= s[trough].at - within;) {
      if (s[k].value > s[peak_idx].value) peak_idx = k;
    }
    const double fall = s[peak_idx].value - s[trough].value;

    const double dip_level = s[peak_idx].value - fall / 2.0;
    std::size_t left = trough, right = trough;
    while (left > 0 && s[left - 1].value <= dip_level) --left;
    while (right + 1 < s.size() && s[right + 1].value <= dip_level) ++right;

    std::optional<std::size_t> recovered;
    const double target = s[trough].value + cfg.recovery_fraction * fall;
    for (std::size_t k = trough + 1; k < s.size() && s[k].at <= s[trough].at + cfg.recovery_horizon; ++k) {
      if (s[k].value >= target) {
        recovered = k;
        break;
      }
    }
    if (recovered && s[right].at - s[left].at >= cfg.min_dip) {
      events.push_back({s[peak_idx].at, s[trough].at, s[*recovered].at, fall});
      i = *recovered + 1;
    } else {
      i = std::max(trough, i) + 1;
    }
  }
  return events;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string join_dates(std::span<const Evidence> evidence) {
  std::string out;
  for (const auto& e : evidence) {
    if (!out.empty()) out.push_back(';');
    out += format_date(e.date);
  }
  return out;
}

inline constexpr std::string_view kAnomalyCsvHeader = "site_id,room_id,kind,metric,value,dates";

inline std::string anomaly_csv(std::span<const AnomalyReport> reports) {
  std::string out(kAnomalyCsvHeader);
  out.push_back('\n');
  for (const auto& r : reports) {
    out += r.site_id + "," + r.room_id + "," + std::string(to_string(r.kind)) + "," + r.metric + "," +
           csv::format_fixed(r.value, 4) + "," + join_dates(r.evidence) + "\n";
  }
  return out;
}

/// One JSON object per line, one line per anomaly.
inline std::string anomaly_records(std::span<const AnomalyReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    Json j;
    j["site_id"] = r.site_id;
    j["room_id"] = r.room_id;
    j["kind"] = std::string(to_string(r.kind));
    j["metric"] = r.metric;
    j["value"] = std::round(r.value * 1e4) / 1e4;
    j["evidence"] = Json::array();
    for (const auto& e : r.evidence) {
      j["evidence"].push_back({{"date", format_date(e.date)}, {"value", std::round(e.value * 1e4) / 1e4}});
    }
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace bta
