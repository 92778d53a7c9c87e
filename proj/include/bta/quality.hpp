#pragma once

// Data-quality stage: availability accounting, windowed IQR outlier detection
// and repair, moving-window smoothing and gap filling.
//
// All windows are trailing and time based: the window of a sample at t covers
// (t - W, t]. Pipeline order is flag -> replace -> fill -> smooth.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bta/core.hpp"
#include "bta/csv.hpp"
#include "bta/error.hpp"
#include "bta/ingest.hpp"
#include "bta/time.hpp"

namespace bta {

// ---------------------------------------------------------------------------
// Quartiles

/// Fence multiplier applied to the IQR on both sides.
inline constexpr double kIqrFence = 3.0;

struct QuartileSummary {
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double v) const noexcept { return v >= lower && v <= upper; }
};

/// Percentile of sorted data by linear interpolation between closest ranks:
/// position h = (n - 1) p, result x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
inline double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("percentile of empty data");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline QuartileSummary quartiles_sorted(std::span<const double> sorted) {
  if (sorted.size() < 4) throw InvalidArgument("quartiles need at least 4 values, got " + std::to_string(sorted.size()));
  QuartileSummary q;
  q.q1 = percentile_sorted(sorted, 0.25);
  q.q3 = percentile_sorted(sorted, 0.75);
  q.iqr = q.q3 - q.q1;
  q.lower = q.q1 - kIqrFence * q.iqr;
  q.upper = q.q3 + kIqrFence * q.iqr;
  return q;
}

inline QuartileSummary quartiles(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quartiles_sorted(sorted);
}

// ---------------------------------------------------------------------------
// Availability

struct AvailabilityCell {
  std::string sensor_id;
  std::string site_id;
  SensorKind kind = SensorKind::IndoorTemperature;
  Date date;
  std::size_t expected = 0;
  std::size_t observed = 0;
  double fraction = 0.0;  // observed / expected, clamped to [0, 1]
};

namespace detail {

inline long ceil_div(long num, long den) { return num >= 0 ? (num + den - 1) / den : -((-num) / den); }

/// Number of grid points origin + k * step (k >= 0) inside [from, to).
inline std::size_t grid_points(Timestamp origin, Seconds step, Timestamp from, Timestamp to) {
  if (to <= from) return 0;
  const long first = std::max(0L, ceil_div((from - origin).count(), step.count()));
  const long last = ceil_div((to - origin).count(), step.count());
  return last > first ? static_cast<std::size_t>(last - first) : 0;
}

}  // namespace detail

/// One cell per catalog sensor per UTC day, from the later of the site's start and
/// `from` up to `end`. Expected counts follow the sensing-rate grid anchored at the
/// site's start time, so partial first and last days are pro-rated.
inline std::vector<AvailabilityCell> availability_matrix(const std::map<std::string, TimeSeries>& series,
                                                         const DeploymentCatalog& catalog, Timestamp end,
                                                         std::optional<Timestamp> from = std::nullopt) {
  for (const auto& [id, ts] : series) {
    if (catalog.find_sensor(id) == nullptr) throw ValidationError("sensor '" + id + "' is not in the catalog");
  }
  std::vector<const SensorMeta*> sensors;
  for (const auto& s : catalog.sensors()) sensors.push_back(&s);
  std::sort(sensors.begin(), sensors.end(),
            [](const SensorMeta* a, const SensorMeta* b) { return a->sensor_id < b->sensor_id; });

  std::vector<AvailabilityCell> cells;
  const TimeSeries empty;
  for (const SensorMeta* meta : sensors) {
    const Site& site = catalog.site_of(*meta);
    const Timestamp begin = from ? std::max(*from, site.start_time) : site.start_time;
    if (begin >= end) continue;
    const auto it = series.find(meta->sensor_id);
    const TimeSeries& ts = it == series.end() ? empty : it->second;
    for (Date day{std::chrono::floor<std::chrono::days>(begin)}; start_of_day(day) < end; day = next_day(day)) {
      const Timestamp lo = std::max(start_of_day(day), begin);
      const Timestamp hi = std::min(start_of_day(next_day(day)), end);
      const std::size_t expected = detail::grid_points(site.start_time, meta->sensing_rate, lo, hi);
      if (expected == 0) continue;
      const auto [a, b] = index_range(ts, lo, hi);
      AvailabilityCell cell{meta->sensor_id, meta->site_id, meta->kind, day, expected, b - a, 0.0};
      cell.fraction = std::min(1.0, static_cast<double>(cell.observed) / static_cast<double>(expected));
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

/// 100 * (1 - observed / expected) summed over the given cells. Surplus samples on
/// a day never offset missing ones on another.
inline double outage_percentage(std::span<const AvailabilityCell> cells) {
  if (cells.empty()) throw InvalidArgument("outage_percentage: empty group");
  double expected = 0.0, observed = 0.0;
  for (const auto& c : cells) {
    expected += static_cast<double>(c.expected);
    observed += static_cast<double>(std::min(c.observed, c.expected));
  }
  return 100.0 * (1.0 - observed / expected);
}

enum class Grouping { Site, Category };

/// Outage percentage per site id or per sensor category name.
inline std::map<std::string, double> outage_by(std::span<const AvailabilityCell> cells, Grouping grouping) {
  std::map<std::string, std::vector<AvailabilityCell>> groups;
  for (const auto& c : cells) {
    const std::string key = grouping == Grouping::Site ? c.site_id : std::string(to_string(category_of(c.kind)));
    groups[key].push_back(c);
  }
  std::map<std::string, double> out;
  for (const auto& [key, group] : groups) out[key] = outage_percentage(group);
  return out;
}

// ---------------------------------------------------------------------------
// Outliers

enum class OutlierKind { ZeroError, Spike, BoundViolation };

inline std::string_view to_string(OutlierKind kind) {
  switch (kind) {
    case OutlierKind::ZeroError: return "ZeroError";
    case OutlierKind::Spike: return "Spike";
    case OutlierKind::BoundViolation: return "BoundViolation";
  }
  return "?";
}

/// Which side of the window's bulk a flagged value lies on; selects min or max on replacement.
enum class Side { Low, High };

struct OutlierFlag {
  std::size_t index = 0;
  OutlierKind kind = OutlierKind::BoundViolation;
  Side side = Side::Low;

  friend bool operator==(const OutlierFlag&, const OutlierFlag&) = default;
};

struct OutlierRules {
  TimeWindow window{std::chrono::hours{24}};
  bool zero_implausible = false;
  bool detect_spikes = false;
  double spike_factor = 5.0;
  std::size_t min_window_samples = 4;
};

namespace detail {

/// Sorted multiset of the values currently inside a sliding window.
class SortedWindow {
 public:
  void insert(double v) { data_.insert(std::upper_bound(data_.begin(), data_.end(), v), v); }
  void erase(double v) {
    const auto it = std::lower_bound(data_.begin(), data_.end(), v);
    if (it != data_.end() && *it == v) data_.erase(it);
  }
  std::span<const double> sorted() const noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }

 private:
  std::vector<double> data_;
};

}  // namespace detail

/// Flags samples outside [Q1 - 3 IQR, Q3 + 3 IQR] of their trailing window.
/// Windows with fewer than `min_window_samples` samples pass unflagged. With
/// `zero_implausible`, exact zeros are flagged ZeroError; with `detect_spikes`, a
/// jump from the last accepted value larger than `spike_factor` times the standard
/// deviation of the accepted values in the window is flagged Spike. At most one
/// flag per sample, preferring ZeroError, then Spike, then BoundViolation.
inline std::vector<OutlierFlag> flag_outliers(const TimeSeries& series, const OutlierRules& rules) {
  const auto s = series.samples();
  const Seconds w = rules.window.duration();
  std::vector<OutlierFlag> flags;
  std::vector<bool> flagged(s.size(), false);
  detail::SortedWindow window;

  // Running moments of accepted values in the window, shifted by the first value for accuracy.
  const double shift = s.empty() ? 0.0 : s[0].value;
  double acc_sum = 0.0, acc_sq = 0.0;
  std::size_t acc_n = 0;
  std::optional<double> last_accepted;

  std::size_t lo = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    while (s[lo].at <= s[i].at - w) {
      window.erase(s[lo].value);
      if (!flagged[lo]) {
        const double d = s[lo].value - shift;
        acc_sum -= d;
        acc_sq -= d * d;
        --acc_n;
      }
      ++lo;
    }
    const double v = s[i].value;
    std::optional<OutlierFlag> flag;

    if (rules.zero_implausible && v == 0.0) {
      flag = OutlierFlag{i, OutlierKind::ZeroError, Side::Low};
    }
    if (!flag && rules.detect_spikes && last_accepted && acc_n >= rules.min_window_samples) {
      const double n = static_cast<double>(acc_n);
      const double mean = acc_sum / n;
      const double var = std::max(0.0, acc_sq / n - mean * mean);
      const double jump = v - *last_accepted;
      if (std::abs(jump) > rules.spike_factor * std::sqrt(var)) {
        flag = OutlierFlag{i, OutlierKind::Spike, jump < 0 ? Side::Low : Side::High};
      }
    }
    window.insert(v);
    if (!flag && window.size() >= rules.min_window_samples) {
      const auto q = quartiles_sorted(window.sorted());
      if (!q.contains(v)) flag = OutlierFlag{i, OutlierKind::BoundViolation, v < q.lower ? Side::Low : Side::High};
    }

    if (flag) {
      if (flag->kind == OutlierKind::ZeroError) {
        const double median = percentile_sorted(window.sorted(), 0.5);
        flag->side = v <= median ? Side::Low : Side::High;
      }
      flagged[i] = true;
      flags.push_back(*flag);
    } else {
      const double d = v - shift;
      acc_sum += d;
      acc_sq += d * d;
      ++acc_n;
      last_accepted = v;
    }
  }
  return flags;
}

/// Window-only variant: bound violations, no zero or spike rules.
inline std::vector<OutlierFlag> flag_outliers(const TimeSeries& series, TimeWindow w) {
  OutlierRules rules;
  rules.window = w;
  return flag_outliers(series, rules);
}

struct ReplaceResult {
  TimeSeries series;
  std::vector<std::size_t> dropped;  // input indices whose window held only flagged samples
};

/// Replaces each flagged sample by the minimum (Low side) or maximum (High side)
/// of the non-flagged samples in its trailing window.
inline ReplaceResult replace_outliers(const TimeSeries& series, std::span<const OutlierFlag> flags, TimeWindow w) {
  const auto s = series.samples();
  std::vector<const OutlierFlag*> by_index(s.size(), nullptr);
  for (const auto& f : flags) {
    if (f.index >= s.size()) throw InvalidArgument("outlier flag index out of range");
    by_index[f.index] = &f;
  }
  ReplaceResult out;
  std::vector<Sample> samples;
  samples.reserve(s.size());
  std::size_t lo = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    while (s[lo].at <= s[i].at - w.duration()) ++lo;
    if (by_index[i] == nullptr) {
      samples.push_back(s[i]);
      continue;
    }
    std::optional<double> mn, mx;
    for (std::size_t j = lo; j <= i; ++j) {
      if (by_index[j] != nullptr) continue;
      mn = mn ? std::min(*mn, s[j].value) : s[j].value;
      mx = mx ? std::max(*mx, s[j].value) : s[j].value;
    }
    if (!mn) {
      out.dropped.push_back(i);
      continue;
    }
    samples.push_back({s[i].at, by_index[i]->side == Side::Low ? *mn : *mx});
  }
  out.series = TimeSeries(series.sensor_id(), std::move(samples));
  return out;
}

// ---------------------------------------------------------------------------
// Smoothing and filling

namespace detail {

/// Mean of values[first, last) computed around a pivot and clamped to the range's extrema.
inline double bounded_mean(std::span<const double> values) {
  const double pivot = values.front();
  long double acc = 0.0L;
  double mn = pivot, mx = pivot;
  for (const double v : values) {
    acc += static_cast<long double>(v - pivot);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  const double mean = pivot + static_cast<double>(acc / static_cast<long double>(values.size()));
  return std::clamp(mean, mn, mx);
}

/// Monotonic deque tracking the extremum of a sliding window of indices.
template <typename Better>
class SlidingExtremum {
 public:
  explicit SlidingExtremum(std::span<const double> values) : values_(values) {}
  void push(std::size_t i) {
    while (!idx_.empty() && !Better{}(values_[idx_.back()], values_[i])) idx_.pop_back();
    idx_.push_back(i);
  }
  void expire_before(std::size_t lo) {
    while (!idx_.empty() && idx_.front() < lo) idx_.pop_front();
  }
  double value() const { return values_[idx_.front()]; }

 private:
  std::span<const double> values_;
  std::deque<std::size_t> idx_;
};

}  // namespace detail

/// Each value becomes the mean of the samples in its trailing window (t - w, t].
inline TimeSeries moving_average(const TimeSeries& series, TimeWindow w) {
  const auto s = series.samples();
  if (s.empty()) return series;
  const std::vector<double> values = series.values();
  const double pivot = values.front();
  std::vector<long double> prefix(values.size() + 1, 0.0L);
  for (std::size_t i = 0; i < values.size(); ++i) prefix[i + 1] = prefix[i] + static_cast<long double>(values[i] - pivot);

  detail::SlidingExtremum<std::less<>> mins(values);
  detail::SlidingExtremum<std::greater<>> maxs(values);
  std::vector<Sample> out;
  out.reserve(s.size());
  std::size_t lo = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    while (s[lo].at <= s[i].at - w.duration()) ++lo;
    mins.push(i);
    maxs.push(i);
    mins.expire_before(lo);
    maxs.expire_before(lo);
    const auto n = static_cast<long double>(i + 1 - lo);
    const double mean = pivot + static_cast<double>((prefix[i + 1] - prefix[lo]) / n);
    out.push_back({s[i].at, std::clamp(mean, mins.value(), maxs.value())});
  }
  return TimeSeries(series.sensor_id(), std::move(out));
}

struct FillResult {
  TimeSeries series;
  std::vector<Timestamp> filled;  // grid points whose value was imputed
  std::vector<Gap> unfilled;      // runs of grid points left absent
};

/// Resamples onto the sensing-rate grid anchored at the first sample and fills each
/// missing grid point with the mean of the observed samples in (t - w, t). Samples
/// off the grid snap to the nearest grid point (later samples win ties). Imputed
/// values never feed later imputations.
inline FillResult fill_missing(const TimeSeries& series, const SensorMeta& meta, TimeWindow w) {
  FillResult out;
  if (series.empty()) {
    out.series = series;
    return out;
  }
  const Seconds step = meta.sensing_rate;
  const Timestamp origin = series.front().at;
  const auto slot_of = [&](Timestamp t) {
    const double k = static_cast<double>((t - origin).count()) / static_cast<double>(step.count());
    return static_cast<std::size_t>(std::llround(k));
  };
  const std::size_t slots = slot_of(series.back().at) + 1;
  std::vector<std::optional<double>> grid(slots);
  for (const auto& sm : series) grid[slot_of(sm.at)] = sm.value;

  // Observed grid points, in order, for window lookups.
  std::vector<Timestamp> obs_at;
  std::vector<double> obs_v;
  for (std::size_t k = 0; k < slots; ++k) {
    if (grid[k]) {
      obs_at.push_back(origin + step * static_cast<long>(k));
      obs_v.push_back(*grid[k]);
    }
  }

  std::vector<Sample> samples;
  samples.reserve(slots);
  std::size_t lo = 0, hi = 0;  // observed indices inside (t - w, t)
  std::optional<Timestamp> gap_start;
  for (std::size_t k = 0; k < slots; ++k) {
    const Timestamp t = origin + step * static_cast<long>(k);
    if (grid[k]) {
      if (gap_start) {
        out.unfilled.push_back({*gap_start, t});
        gap_start.reset();
      }
      samples.push_back({t, *grid[k]});
      continue;
    }
    while (hi < obs_at.size() && obs_at[hi] < t) ++hi;
    while (lo < hi && obs_at[lo] <= t - w.duration()) ++lo;
    if (lo < hi) {
      if (gap_start) {
        out.unfilled.push_back({*gap_start, t});
        gap_start.reset();
      }
      samples.push_back({t, detail::bounded_mean(std::span<const double>(obs_v).subspan(lo, hi - lo))});
      out.filled.push_back(t);
    } else if (!gap_start) {
      gap_start = t;
    }
  }
  out.series = TimeSeries(series.sensor_id(), std::move(samples));
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

struct QualityConfig {
  Seconds environmental_window = std::chrono::hours{24};
  Seconds power_window = std::chrono::hours{1};
  Seconds fill_window = std::chrono::hours{1};
  Seconds smooth_window{120};  // zero disables smoothing
  double spike_factor = 5.0;
  std::size_t min_window_samples = 4;
};

inline TimeWindow outlier_window_for(SensorKind kind, const QualityConfig& cfg) {
  return TimeWindow(kind == SensorKind::PowerPhase ? cfg.power_window : cfg.environmental_window);
}

/// Zero is implausible for humidity everywhere and for indoor temperature where the
/// site's climate flag says so.
inline bool zero_implausible(SensorKind kind, const Site& site) {
  return kind == SensorKind::RelativeHumidity || (kind == SensorKind::IndoorTemperature && site.zero_implausible_indoor);
}

inline OutlierRules outlier_rules_for(const SensorMeta& meta, const Site& site, const QualityConfig& cfg) {
  OutlierRules rules;
  rules.window = outlier_window_for(meta.kind, cfg);
  rules.zero_implausible = zero_implausible(meta.kind, site);
  rules.detect_spikes = meta.kind == SensorKind::PowerPhase;
  rules.spike_factor = cfg.spike_factor;
  rules.min_window_samples = cfg.min_window_samples;
  return rules;
}

struct RepairOutcome {
  TimeSeries repaired;
  std::vector<OutlierFlag> flags;
  std::vector<Timestamp> flagged_at;
  std::vector<Timestamp> dropped;
  std::vector<Timestamp> filled;
  std::vector<Gap> unfilled;
};

/// flag -> replace -> fill -> smooth.
inline RepairOutcome repair_series(const TimeSeries& raw, const SensorMeta& meta, const Site& site,
                                   const QualityConfig& cfg) {
  RepairOutcome out;
  const OutlierRules rules = outlier_rules_for(meta, site, cfg);
  out.flags = flag_outliers(raw, rules);
  for (const auto& f : out.flags) out.flagged_at.push_back(raw[f.index].at);
  ReplaceResult replaced = replace_outliers(raw, out.flags, rules.window);
  for (const auto i : replaced.dropped) out.dropped.push_back(raw[i].at);
  FillResult filled = fill_missing(replaced.series, meta, TimeWindow(cfg.fill_window));
  out.filled = std::move(filled.filled);
  out.unfilled = std::move(filled.unfilled);
  out.repaired = cfg.smooth_window > Seconds{0} ? moving_average(filled.series, TimeWindow(cfg.smooth_window))
                                                : std::move(filled.series);
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::string_view kQualityDailyHeader =
    "sensor_id,site_id,kind,date,expected,observed,fraction,outage_pct,zero_errors,spikes,bound_violations,fills";

/// Per sensor per day: availability plus flags by kind and fills performed.
inline std::string quality_daily_csv(std::span<const AvailabilityCell> cells,
                                     const std::map<std::string, RepairOutcome>& outcomes) {
  // Per sensor: date -> counts
  struct Counts {
    std::size_t zero = 0, spike = 0, bound = 0, fills = 0;
  };
  std::map<std::string, std::map<int, Counts>> per_day;
  const auto day_key = [](Timestamp t) {
    return static_cast<int>(std::chrono::floor<std::chrono::days>(t).time_since_epoch().count());
  };
  for (const auto& [id, outcome] : outcomes) {
    auto& days = per_day[id];
    for (std::size_t i = 0; i < outcome.flags.size(); ++i) {
      auto& c = days[day_key(outcome.flagged_at[i])];
      switch (outcome.flags[i].kind) {
        case OutlierKind::ZeroError: ++c.zero; break;
        case OutlierKind::Spike: ++c.spike; break;
        case OutlierKind::BoundViolation: ++c.bound; break;
      }
    }
    for (const auto t : outcome.filled) ++days[day_key(t)].fills;
  }
  std::string out(kQualityDailyHeader);
  out.push_back('\n');
  for (const auto& c : cells) {
    Counts counts;
    if (const auto it = per_day.find(c.sensor_id); it != per_day.end()) {
      const int key = static_cast<int>(std::chrono::sys_days{c.date}.time_since_epoch().count());
      if (const auto jt = it->second.find(key); jt != it->second.end()) counts = jt->second;
    }
    const double outage = 100.0 * (1.0 - c.fraction);
    out += c.sensor_id + "," + c.site_id + "," + std::string(to_string(c.kind)) + "," + format_date(c.date) + "," +
           std::to_string(c.expected) + "," + std::to_string(c.observed) + "," + csv::format_fixed(c.fraction, 6) +
           "," + csv::format_fixed(outage, 4) + "," + std::to_string(counts.zero) + "," +
           std::to_string(counts.spike) + "," + std::to_string(counts.bound) + "," + std::to_string(counts.fills) +
           "\n";
  }
  return out;
}

struct GroupQualityRow {
  std::string name;
  std::size_t points_of_sensing = 0;
  std::size_t sensors = 0;
  std::optional<Timestamp> start_time;
  double outage_pct = 0.0;
  double outlier_pct = 0.0;
  std::size_t measurements = 0;
};

namespace detail {

inline GroupQualityRow summarize_group(std::string name, const std::vector<const SensorMeta*>& members,
                                       std::span<const AvailabilityCell> cells,
                                       const std::map<std::string, std::size_t>& observed,
                                       const std::map<std::string, RepairOutcome>& outcomes) {
  GroupQualityRow row;
  row.name = std::move(name);
  row.sensors = members.size();
  std::set<std::string> pos;
  std::set<std::string> ids;
  std::size_t flags = 0;
  for (const auto* m : members) {
    ids.insert(m->sensor_id);
    pos.insert(m->site_id + "/" + (m->room_id ? *m->room_id : std::string("*site")));
    if (const auto it = observed.find(m->sensor_id); it != observed.end()) row.measurements += it->second;
    if (const auto it = outcomes.find(m->sensor_id); it != outcomes.end()) flags += it->second.flags.size();
  }
  row.points_of_sensing = pos.size();
  std::vector<AvailabilityCell> group;
  for (const auto& c : cells) {
    if (ids.contains(c.sensor_id)) group.push_back(c);
  }
  row.outage_pct = group.empty() ? 0.0 : outage_percentage(group);
  row.outlier_pct = row.measurements == 0 ? 0.0 : 100.0 * static_cast<double>(flags) / static_cast<double>(row.measurements);
  return row;
}

}  // namespace detail

/// One row per site: points of sensing, sensors, start, outage %, outlier %.
inline std::vector<GroupQualityRow> site_quality_table(const DeploymentCatalog& catalog,
                                                       std::span<const AvailabilityCell> cells,
                                                       const std::map<std::string, std::size_t>& observed,
                                                       const std::map<std::string, RepairOutcome>& outcomes) {
  std::vector<GroupQualityRow> rows;
  for (const auto& site : catalog.sites()) {
    std::vector<const SensorMeta*> members;
    for (const auto& s : catalog.sensors()) {
      if (s.site_id == site.site_id) members.push_back(&s);
    }
    auto row = detail::summarize_group(site.site_id, members, cells, observed, outcomes);
    row.start_time = site.start_time;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return rows;
}

/// One row per sensor category; every category is listed even when it has no sensors.
inline std::vector<GroupQualityRow> category_quality_table(const DeploymentCatalog& catalog,
                                                           std::span<const AvailabilityCell> cells,
                                                           const std::map<std::string, std::size_t>& observed,
                                                           const std::map<std::string, RepairOutcome>& outcomes) {
  std::vector<GroupQualityRow> rows;
  for (const auto category : kAllSensorCategories) {
    std::vector<const SensorMeta*> members;
    for (const auto& s : catalog.sensors()) {
      if (category_of(s.kind) == category) members.push_back(&s);
    }
    rows.push_back(detail::summarize_group(std::string(to_string(category)), members, cells, observed, outcomes));
  }
  return rows;
}

inline std::string site_quality_csv(std::span<const GroupQualityRow> rows) {
  std::string out = "site_id,pos,sensors,start_time,outage_pct,outlier_pct,measurements\n";
  for (const auto& r : rows) {
    out += r.name + "," + std::to_string(r.points_of_sensing) + "," + std::to_string(r.sensors) + "," +
           (r.start_time ? format_timestamp(*r.start_time) : std::string()) + "," + csv::format_fixed(r.outage_pct, 4) +
           "," + csv::format_fixed(r.outlier_pct, 4) + "," + std::to_string(r.measurements) + "\n";
  }
  return out;
}

inline std::string category_quality_csv(std::span<const GroupQualityRow> rows) {
  std::string out = "category,pos,sensors,inactive_pct,outlier_pct,measurements\n";
  for (const auto& r : rows) {
    out += r.name + "," + std::to_string(r.points_of_sensing) + "," + std::to_string(r.sensors) + "," +
           csv::format_fixed(r.outage_pct, 4) + "," + csv::format_fixed(r.outlier_pct, 4) + "," +
           std::to_string(r.measurements) + "\n";
  }
  return out;
}

}  // namespace bta
