#pragma once

// Domain model shared by every analysis: time series, sensor metadata and the
// deployment catalog (sites -> classrooms -> sensors).

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bta/error.hpp"
#include "bta/time.hpp"

namespace bta {

struct Sample {
  Timestamp at;
  double value = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Ordered samples of one sensor. Timestamps strictly increase and every value is finite.
class TimeSeries {
 public:
  TimeSeries() = default;

  explicit TimeSeries(std::string sensor_id, std::vector<Sample> samples = {})
      : sensor_id_(std::move(sensor_id)), samples_(std::move(samples)) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i].value)) {
        throw InvalidArgument("series '" + sensor_id_ + "': non-finite value at " + format_timestamp(samples_[i].at));
      }
      if (i > 0 && samples_[i].at <= samples_[i - 1].at) {
        throw InvalidArgument("series '" + sensor_id_ + "': timestamps not strictly increasing at " +
                              format_timestamp(samples_[i].at));
      }
    }
  }

  const std::string& sensor_id() const noexcept { return sensor_id_; }
  std::span<const Sample> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const Sample& front() const { return samples_.front(); }
  const Sample& back() const { return samples_.back(); }
  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.value);
    return out;
  }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::string sensor_id_;
  std::vector<Sample> samples_;
};

/// Index range [first, last) of samples with from <= t < to.
inline std::pair<std::size_t, std::size_t> index_range(const TimeSeries& series, Timestamp from, Timestamp to) {
  const auto s = series.samples();
  const auto lo = std::lower_bound(s.begin(), s.end(), from, [](const Sample& a, Timestamp t) { return a.at < t; });
  const auto hi = std::lower_bound(lo, s.end(), to, [](const Sample& a, Timestamp t) { return a.at < t; });
  return {static_cast<std::size_t>(lo - s.begin()), static_cast<std::size_t>(hi - s.begin())};
}

/// Samples in the half-open interval [from, to).
inline TimeSeries slice(const TimeSeries& series, Timestamp from, Timestamp to) {
  if (from > to) {
    throw InvalidArgument("slice: from " + format_timestamp(from) + " is after to " + format_timestamp(to));
  }
  const auto [lo, hi] = index_range(series, from, to);
  const auto s = series.samples();
  return TimeSeries(series.sensor_id(), std::vector<Sample>(s.begin() + lo, s.begin() + hi));
}

template <typename Pred>
TimeSeries filter(const TimeSeries& series, Pred&& keep) {
  std::vector<Sample> out;
  for (const auto& s : series) {
    if (keep(s)) out.push_back(s);
  }
  return TimeSeries(series.sensor_id(), std::move(out));
}

inline constexpr Seconds kSchoolDayStart = std::chrono::hours{8} + Minutes{30};
inline constexpr Seconds kSchoolDayEnd = std::chrono::hours{16} + Minutes{30};

/// Keeps samples whose local wall-clock time lies in [08:30, 16:30).
inline TimeSeries filter_school_hours(const TimeSeries& series, UtcOffset offset) {
  return filter(series, [offset](const Sample& s) {
    const Seconds tod = local_time_of_day(s.at, offset);
    return tod >= kSchoolDayStart && tod < kSchoolDayEnd;
  });
}

/// Keeps samples whose local date is a Saturday or Sunday.
inline TimeSeries filter_weekends(const TimeSeries& series, UtcOffset offset) {
  return filter(series, [offset](const Sample& s) { return is_weekend(local_date(s.at, offset)); });
}

// ---------------------------------------------------------------------------
// Sensors

enum class SensorKind {
  IndoorTemperature,
  RelativeHumidity,
  Luminosity,
  Noise,
  Occupancy,
  PowerPhase,
  OutdoorTemperature,
  WindSpeed,
  AtmosphericPressure,
  Precipitation,
  Pollutant,
  CloudCover,
};

inline constexpr std::array kAllSensorKinds = {
    SensorKind::IndoorTemperature, SensorKind::RelativeHumidity,   SensorKind::Luminosity,
    SensorKind::Noise,             SensorKind::Occupancy,          SensorKind::PowerPhase,
    SensorKind::OutdoorTemperature, SensorKind::WindSpeed,         SensorKind::AtmosphericPressure,
    SensorKind::Precipitation,     SensorKind::Pollutant,          SensorKind::CloudCover,
};

inline std::string_view to_string(SensorKind kind) {
  switch (kind) {
    case SensorKind::IndoorTemperature: return "IndoorTemperature";
    case SensorKind::RelativeHumidity: return "RelativeHumidity";
    case SensorKind::Luminosity: return "Luminosity";
    case SensorKind::Noise: return "Noise";
    case SensorKind::Occupancy: return "Occupancy";
    case SensorKind::PowerPhase: return "PowerPhase";
    case SensorKind::OutdoorTemperature: return "OutdoorTemperature";
    case SensorKind::WindSpeed: return "WindSpeed";
    case SensorKind::AtmosphericPressure: return "AtmosphericPressure";
    case SensorKind::Precipitation: return "Precipitation";
    case SensorKind::Pollutant: return "Pollutant";
    case SensorKind::CloudCover: return "CloudCover";
  }
  return "?";
}

/// Fixed unit of each kind. Ingestion rejects mismatches instead of converting.
inline std::string_view unit_of(SensorKind kind) {
  switch (kind) {
    case SensorKind::IndoorTemperature: return "degC";
    case SensorKind::RelativeHumidity: return "%";
    case SensorKind::Luminosity: return "lux";
    case SensorKind::Noise: return "dB";
    case SensorKind::Occupancy: return "boolean";
    case SensorKind::PowerPhase: return "W";
    case SensorKind::OutdoorTemperature: return "degC";
    case SensorKind::WindSpeed: return "m/s";
    case SensorKind::AtmosphericPressure: return "hPa";
    case SensorKind::Precipitation: return "mm";
    case SensorKind::Pollutant: return "ppm";
    case SensorKind::CloudCover: return "fraction";
  }
  return "?";
}

inline std::optional<SensorKind> parse_sensor_kind(std::string_view text) {
  for (const auto kind : kAllSensorKinds) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

/// Device families used for per-type availability tables.
enum class SensorCategory { Environmental, Atmospheric, Weather, Power };

inline constexpr std::array kAllSensorCategories = {SensorCategory::Environmental, SensorCategory::Atmospheric,
                                                    SensorCategory::Weather, SensorCategory::Power};

inline SensorCategory category_of(SensorKind kind) {
  switch (kind) {
    case SensorKind::IndoorTemperature:
    case SensorKind::RelativeHumidity:
    case SensorKind::Luminosity:
    case SensorKind::Noise:
    case SensorKind::Occupancy: return SensorCategory::Environmental;
    case SensorKind::AtmosphericPressure:
    case SensorKind::Pollutant: return SensorCategory::Atmospheric;
    case SensorKind::OutdoorTemperature:
    case SensorKind::WindSpeed:
    case SensorKind::Precipitation:
    case SensorKind::CloudCover: return SensorCategory::Weather;
    case SensorKind::PowerPhase: return SensorCategory::Power;
  }
  return SensorCategory::Environmental;
}

inline std::string_view to_string(SensorCategory category) {
  switch (category) {
    case SensorCategory::Environmental: return "Environmental";
    case SensorCategory::Atmospheric: return "Atmospheric";
    case SensorCategory::Weather: return "Weather";
    case SensorCategory::Power: return "Power";
  }
  return "?";
}

inline constexpr Seconds kDefaultClassroomSensingRate{30};

struct SensorMeta {
  std::string sensor_id;
  std::string site_id;
  std::optional<std::string> room_id;
  SensorKind kind = SensorKind::IndoorTemperature;
  Seconds sensing_rate = kDefaultClassroomSensingRate;

  friend bool operator==(const SensorMeta&, const SensorMeta&) = default;
};

enum class Orientation { N, NE, E, SE, S, SW, W, NW };

inline constexpr std::array kAllOrientations = {Orientation::N, Orientation::NE, Orientation::E, Orientation::SE,
                                                Orientation::S, Orientation::SW, Orientation::W, Orientation::NW};

inline std::string_view to_string(Orientation o) {
  static constexpr std::array<std::string_view, 8> names = {"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
  return names[static_cast<std::size_t>(o)];
}

inline std::optional<Orientation> parse_orientation(std::string_view text) {
  for (const auto o : kAllOrientations) {
    if (to_string(o) == text) return o;
  }
  return std::nullopt;
}

struct Classroom {
  std::string room_id;
  std::string site_id;
  Orientation orientation = Orientation::S;
  std::string label;

  friend bool operator==(const Classroom&, const Classroom&) = default;
};

struct Site {
  std::string site_id;
  double latitude = 0.0;
  double longitude = 0.0;
  Timestamp start_time{};
  UtcOffset tz_offset{0};
  // Climate flag: whether an indoor reading of exactly 0 degC is physically implausible.
  bool zero_implausible_indoor = true;
  std::vector<Classroom> rooms;

  const Classroom* find_room(std::string_view room_id) const {
    for (const auto& r : rooms) {
      if (r.room_id == room_id) return &r;
    }
    return nullptr;
  }

  friend bool operator==(const Site&, const Site&) = default;
};

/// Validated deployment description. Construction enforces every cross-reference.
class DeploymentCatalog {
 public:
  DeploymentCatalog() = default;

  DeploymentCatalog(std::vector<Site> sites, std::vector<SensorMeta> sensors)
      : sites_(std::move(sites)), sensors_(std::move(sensors)) {
    std::set<std::string> site_ids;
    for (auto& site : sites_) {
      if (site.site_id.empty()) throw ValidationError("site with empty site_id");
      if (!site_ids.insert(site.site_id).second) throw ValidationError("duplicate site_id '" + site.site_id + "'");
      std::set<std::string> room_ids;
      for (auto& room : site.rooms) {
        if (room.site_id.empty()) room.site_id = site.site_id;
        if (room.site_id != site.site_id) {
          throw ValidationError("room '" + room.room_id + "' lists site '" + room.site_id + "' but is nested in '" +
                                site.site_id + "'");
        }
        if (!room_ids.insert(room.room_id).second) {
          throw ValidationError("duplicate room_id '" + room.room_id + "' in site '" + site.site_id + "'");
        }
      }
    }
    std::set<std::string> sensor_ids;
    for (const auto& sensor : sensors_) {
      if (!sensor_ids.insert(sensor.sensor_id).second) {
        throw ValidationError("duplicate sensor_id '" + sensor.sensor_id + "'");
      }
      const Site* site = find_site(sensor.site_id);
      if (site == nullptr) {
        throw ValidationError("sensor '" + sensor.sensor_id + "' references unknown site '" + sensor.site_id + "'");
      }
      if (sensor.room_id && site->find_room(*sensor.room_id) == nullptr) {
        throw ValidationError("sensor '" + sensor.sensor_id + "' references unknown room '" + *sensor.room_id +
                              "' in site '" + sensor.site_id + "'");
      }
      if (sensor.sensing_rate <= Seconds{0}) {
        throw ValidationError("sensor '" + sensor.sensor_id + "' has non-positive sensing_rate");
      }
    }
  }

  std::span<const Site> sites() const noexcept { return sites_; }
  std::span<const SensorMeta> sensors() const noexcept { return sensors_; }

  const Site* find_site(std::string_view site_id) const {
    for (const auto& s : sites_) {
      if (s.site_id == site_id) return &s;
    }
    return nullptr;
  }

  const SensorMeta* find_sensor(std::string_view sensor_id) const {
    for (const auto& s : sensors_) {
      if (s.sensor_id == sensor_id) return &s;
    }
    return nullptr;
  }

  const Site& site_of(const SensorMeta& sensor) const { return *find_site(sensor.site_id); }

  /// Sensors of one kind attached to a given room.
  std::vector<const SensorMeta*> room_sensors(std::string_view site_id, std::string_view room_id,
                                              SensorKind kind) const {
    std::vector<const SensorMeta*> out;
    for (const auto& s : sensors_) {
      if (s.site_id == site_id && s.room_id && *s.room_id == room_id && s.kind == kind) out.push_back(&s);
    }
    return out;
  }

  friend bool operator==(const DeploymentCatalog&, const DeploymentCatalog&) = default;

 private:
  std::vector<Site> sites_;
  std::vector<SensorMeta> sensors_;
};

/// Duration of a trailing analysis window. Always positive.
class TimeWindow {
 public:
  explicit TimeWindow(Seconds duration) : duration_(duration) {
    if (duration <= Seconds{0}) throw InvalidArgument("time window must be positive");
  }

  Seconds duration() const noexcept { return duration_; }

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;

 private:
  Seconds duration_;
};

}  // namespace bta
