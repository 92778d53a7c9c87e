#pragma once

// Synthetic multi-site deployment with ground truth.
//
// Indoor temperature model per classroom (local hour h, step dt):
//   T = base + swing * (d(h) + 1) / 2 + S + D + E + noise
// where d(h) is a diurnal shape with its minimum at 08:00 and maximum at 16:00,
// S is a first-order lagged response to solar input
//   dS/dt = (gain / lag) * P - S / lag,  P = (1 - cloud) * orientation_gain(h) * shade,
// D is a slow AR(1) room drift, E holds injected window-opening drops and noise
// is white Gaussian. Outages, zero errors and power spikes are then injected and
// logged.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bta/core.hpp"
#include "bta/csv.hpp"
#include "bta/error.hpp"
#include "bta/ingest.hpp"
#include "bta/performance.hpp"
#include "bta/quality.hpp"
#include "bta/time.hpp"

namespace bta::synth {

enum class Insulation { Good, Poor };

inline std::string_view to_string(Insulation i) { return i == Insulation::Good ? "good" : "poor"; }

struct RoomSpec {
  std::string room_id;
  Orientation orientation = Orientation::S;
  Insulation insulation = Insulation::Good;
  bool blinds = true;
  int events = -1;  // window-opening events; negative means the scenario default
};

struct SiteSpec {
  std::string site_id;
  double latitude = 38.0;
  double longitude = 23.7;
  UtcOffset tz_offset{120};
  double outdoor_mean_c = 20.0;
  double outdoor_amplitude_c = 5.0;
  double indoor_base_c = 21.0;
  double outage_fraction = -1.0;  // negative means the scenario default
  std::vector<RoomSpec> rooms;
};

struct InjectionRates {
  double outage_fraction = 0.0;
  double zero_error_rate = 0.0;
  double spike_rate = 0.0;
  int outage_block_min_hours = 1;
  int outage_block_max_hours = 24;
};

struct ThermalModel {
  double noise_sigma_c = 0.2;
  double good_swing_c = 0.2;
  double poor_swing_c = 12.0;
  double solar_gain_c = 6.0;  // steady-state rise under unit solar input
  double solar_lag_hours = 12.0;
  double drift_sigma_c = 0.25;
  double drift_hours = 6.0;
  double blinds_transmission = 0.25;
  double event_drop_c = 2.0;
  int event_drop_minutes = 10;
  int event_recovery_minutes = 60;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  Date start{std::chrono::year{2017}, std::chrono::September, std::chrono::day{1}};
  int days = 30;
  Seconds sensing_rate{30};
  Seconds power_sensing_rate{60};
  Seconds station_sensing_rate{300};
  bool humidity = true;
  bool power = true;
  bool station = true;
  int events_per_room = 0;
  InjectionRates injection;
  ThermalModel thermal;
  std::vector<SiteSpec> sites;

  Timestamp begin() const { return start_of_day(start); }
  Timestamp end() const { return start_of_day(add_days(start, days)); }
};

inline void validate(const ScenarioSpec& spec) {
  const auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (spec.days < 1) throw ValidationError("scenario: days must be at least 1");
  if (spec.sensing_rate <= Seconds{0} || spec.power_sensing_rate <= Seconds{0} ||
      spec.station_sensing_rate <= Seconds{0}) {
    throw ValidationError("scenario: sensing rates must be positive");
  }
  const auto& inj = spec.injection;
  if (!rate_ok(inj.outage_fraction) || !rate_ok(inj.zero_error_rate) || !rate_ok(inj.spike_rate)) {
    throw ValidationError("scenario: injection rates must lie in [0, 1]");
  }
  if (inj.outage_block_min_hours < 1 || inj.outage_block_max_hours < inj.outage_block_min_hours) {
    throw ValidationError("scenario: outage block hours must satisfy 1 <= min <= max");
  }
  if (spec.events_per_room < 0) throw ValidationError("scenario: events_per_room must be non-negative");
  if (spec.thermal.noise_sigma_c < 0.0 || spec.thermal.drift_sigma_c < 0.0 || spec.thermal.solar_lag_hours <= 0.0 ||
      spec.thermal.drift_hours <= 0.0 || !rate_ok(spec.thermal.blinds_transmission)) {
    throw ValidationError("scenario: invalid thermal model parameters");
  }
  std::set<std::string> sites;
  for (const auto& site : spec.sites) {
    if (site.site_id.empty() || !sites.insert(site.site_id).second) {
      throw ValidationError("scenario: site ids must be non-empty and unique");
    }
    if (site.outage_fraction > 1.0) throw ValidationError("scenario: site outage_fraction above 1");
    std::set<std::string> rooms;
    for (const auto& room : site.rooms) {
      if (room.room_id.empty() || !rooms.insert(room.room_id).second) {
        throw ValidationError("scenario: room ids must be non-empty and unique within site '" + site.site_id + "'");
      }
    }
  }
}

/// Reads a scenario document (JSON). Either an explicit `sites` array or the
/// `site_count` / `rooms_per_site` shorthand.
inline ScenarioSpec parse_scenario(std::string_view document) {
  const Json j = detail::parse_json(document, "scenario");
  if (!j.is_object()) throw ValidationError("scenario: top level must be an object");
  const std::string ctx = "scenario";
  ScenarioSpec spec;
  spec.seed = detail::optional_field<std::uint64_t>(j, "seed", spec.seed, ctx);
  if (j.contains("start")) {
    try {
      spec.start = parse_date(detail::required<std::string>(j, "start", ctx));
    } catch (const ParseError& e) {
      throw ValidationError(std::string("scenario: ") + e.what());
    }
  }
  spec.days = detail::optional_field<int>(j, "days", spec.days, ctx);
  spec.sensing_rate = Seconds{detail::optional_field<long>(j, "sensing_rate", spec.sensing_rate.count(), ctx)};
  spec.power_sensing_rate =
      Seconds{detail::optional_field<long>(j, "power_sensing_rate", spec.power_sensing_rate.count(), ctx)};
  spec.station_sensing_rate =
      Seconds{detail::optional_field<long>(j, "station_sensing_rate", spec.station_sensing_rate.count(), ctx)};
  spec.humidity = detail::optional_field<bool>(j, "humidity", spec.humidity, ctx);
  spec.power = detail::optional_field<bool>(j, "power", spec.power, ctx);
  spec.station = detail::optional_field<bool>(j, "station", spec.station, ctx);
  spec.events_per_room = detail::optional_field<int>(j, "events_per_room", spec.events_per_room, ctx);

  if (j.contains("injection")) {
    const Json& inj = j.at("injection");
    const std::string ictx = "scenario.injection";
    auto& r = spec.injection;
    r.outage_fraction = detail::optional_field<double>(inj, "outage_fraction", r.outage_fraction, ictx);
    r.zero_error_rate = detail::optional_field<double>(inj, "zero_error_rate", r.zero_error_rate, ictx);
    r.spike_rate = detail::optional_field<double>(inj, "spike_rate", r.spike_rate, ictx);
    r.outage_block_min_hours =
        detail::optional_field<int>(inj, "outage_block_min_hours", r.outage_block_min_hours, ictx);
    r.outage_block_max_hours =
        detail::optional_field<int>(inj, "outage_block_max_hours", r.outage_block_max_hours, ictx);
  }
  if (j.contains("thermal")) {
    const Json& th = j.at("thermal");
    const std::string tctx = "scenario.thermal";
    auto& m = spec.thermal;
    m.noise_sigma_c = detail::optional_field<double>(th, "noise_sigma_c", m.noise_sigma_c, tctx);
    m.good_swing_c = detail::optional_field<double>(th, "good_swing_c", m.good_swing_c, tctx);
    m.poor_swing_c = detail::optional_field<double>(th, "poor_swing_c", m.poor_swing_c, tctx);
    m.solar_gain_c = detail::optional_field<double>(th, "solar_gain_c", m.solar_gain_c, tctx);
    m.solar_lag_hours = detail::optional_field<double>(th, "solar_lag_hours", m.solar_lag_hours, tctx);
    m.drift_sigma_c = detail::optional_field<double>(th, "drift_sigma_c", m.drift_sigma_c, tctx);
    m.drift_hours = detail::optional_field<double>(th, "drift_hours", m.drift_hours, tctx);
    m.blinds_transmission = detail::optional_field<double>(th, "blinds_transmission", m.blinds_transmission, tctx);
    m.event_drop_c = detail::optional_field<double>(th, "event_drop_c", m.event_drop_c, tctx);
  }

  const auto parse_room = [](const Json& jr, const std::string& rctx) {
    RoomSpec room;
    room.room_id = detail::required<std::string>(jr, "room_id", rctx);
    const auto o = parse_orientation(detail::optional_field<std::string>(jr, "orientation", "S", rctx));
    if (!o) throw ValidationError(rctx + ": unknown orientation");
    room.orientation = *o;
    const auto ins = detail::optional_field<std::string>(jr, "insulation", "good", rctx);
    if (ins != "good" && ins != "poor") throw ValidationError(rctx + ": insulation must be 'good' or 'poor'");
    room.insulation = ins == "good" ? Insulation::Good : Insulation::Poor;
    room.blinds = detail::optional_field<bool>(jr, "blinds", true, rctx);
    room.events = detail::optional_field<int>(jr, "events", -1, rctx);
    return room;
  };

  if (j.contains("sites")) {
    const Json& arr = j.at("sites");
    if (!arr.is_array()) throw ValidationError("scenario: 'sites' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Json& js = arr[i];
      const std::string sctx = "scenario.sites[" + std::to_string(i) + "]";
      SiteSpec site;
      site.site_id = detail::required<std::string>(js, "site_id", sctx);
      site.latitude = detail::optional_field<double>(js, "latitude", site.latitude, sctx);
      site.longitude = detail::optional_field<double>(js, "longitude", site.longitude, sctx);
      site.tz_offset = Minutes{detail::optional_field<int>(js, "tz_offset_minutes", 120, sctx)};
      site.outdoor_mean_c = detail::optional_field<double>(js, "outdoor_mean_c", site.outdoor_mean_c, sctx);
      site.outdoor_amplitude_c =
          detail::optional_field<double>(js, "outdoor_amplitude_c", site.outdoor_amplitude_c, sctx);
      site.indoor_base_c = detail::optional_field<double>(js, "indoor_base_c", site.indoor_base_c, sctx);
      site.outage_fraction = detail::optional_field<double>(js, "outage_fraction", -1.0, sctx);
      const Json rooms = js.value("rooms", Json::array());
      for (std::size_t r = 0; r < rooms.size(); ++r) {
        site.rooms.push_back(parse_room(rooms[r], sctx + ".rooms[" + std::to_string(r) + "]"));
      }
      spec.sites.push_back(std::move(site));
    }
  } else {
    const int site_count = detail::optional_field<int>(j, "site_count", 1, ctx);
    const int rooms_per_site = detail::optional_field<int>(j, "rooms_per_site", 4, ctx);
    if (site_count < 0 || rooms_per_site < 0) throw ValidationError("scenario: counts must be non-negative");
    static constexpr std::array<Orientation, 8> cycle = {Orientation::S,  Orientation::SW, Orientation::SE,
                                                         Orientation::N,  Orientation::E,  Orientation::W,
                                                         Orientation::NE, Orientation::NW};
    for (int s = 0; s < site_count; ++s) {
      SiteSpec site;
      site.site_id = std::string(1, static_cast<char>('A' + s % 26)) + (s >= 26 ? std::to_string(s / 26) : "");
      for (int r = 0; r < rooms_per_site; ++r) {
        RoomSpec room;
        room.room_id = "R" + std::to_string(r + 1);
        room.orientation = cycle[static_cast<std::size_t>(r) % cycle.size()];
        site.rooms.push_back(room);
      }
      spec.sites.push_back(std::move(site));
    }
  }
  validate(spec);
  return spec;
}

// ---------------------------------------------------------------------------
// Ground truth

struct InjectedOutlier {
  Timestamp at;
  OutlierKind kind = OutlierKind::ZeroError;
  double value = 0.0;
};

struct SensorTruth {
  std::size_t expected = 0;
  std::size_t deleted = 0;
  std::vector<Gap> outages;
  std::vector<InjectedOutlier> outliers;
};

struct RoomTruth {
  std::string site_id;
  std::string room_id;
  Orientation orientation = Orientation::S;
  Insulation insulation = Insulation::Good;
  bool blinds = true;
  std::vector<Timestamp> events;  // start of each injected drop
};

struct GroundTruth {
  std::map<std::string, SensorTruth> sensors;
  std::map<std::string, RoomTruth> rooms;  // keyed "<site_id>/<room_id>"
};

struct Scenario {
  ScenarioSpec spec;
  DeploymentCatalog catalog;
  std::map<std::string, TimeSeries> series;
  std::map<std::string, WeatherHistory> weather;
  GroundTruth truth;
};

inline std::string room_key(std::string_view site_id, std::string_view room_id) {
  return std::string(site_id) + "/" + std::string(room_id);
}

inline std::string indoor_sensor_id(std::string_view site, std::string_view room) {
  return std::string(site) + "-" + std::string(room) + "-T";
}
inline std::string humidity_sensor_id(std::string_view site, std::string_view room) {
  return std::string(site) + "-" + std::string(room) + "-RH";
}
inline std::string power_sensor_id(std::string_view site) { return std::string(site) + "-P1"; }
inline std::string pressure_sensor_id(std::string_view site) { return std::string(site) + "-PRES"; }
inline std::string outdoor_sensor_id(std::string_view site) { return std::string(site) + "-TOUT"; }

// ---------------------------------------------------------------------------
// Generation

/// Deterministic random source. Uniform and normal variates are derived from raw
/// 64-bit output so results do not depend on the standard library's distributions.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint32_t site, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), site, stream};
    engine_.seed(seq);
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

  double normal() {
    if (cached_) {
      cached_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
    cached_ = true;
    return radius * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool cached_ = false;
};

namespace detail {

inline double round_to(double v, double step) { return std::round(v / step) * step; }

inline double local_hour(Timestamp t, UtcOffset offset) {
  return static_cast<double>(local_time_of_day(t, offset).count()) / 3600.0;
}

/// Diurnal shape in [-1, 1]: rises 08:00 -> 16:00, decays 16:00 -> 08:00.
inline double diurnal_shape(double h) {
  h = std::fmod(std::fmod(h, 24.0) + 24.0, 24.0);
  if (h >= 8.0 && h < 16.0) return -std::cos(std::numbers::pi * (h - 8.0) / 8.0);
  const double since_peak = h >= 16.0 ? h - 16.0 : h + 8.0;
  return std::cos(std::numbers::pi * since_peak / 16.0);
}

/// Smooth school-day load bump between 07:00 and 17:00.
inline double load_bump(double h) {
  if (h < 7.0 || h >= 17.0) return 0.0;
  return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (h - 7.0) / 10.0));
}

inline constexpr Seconds kWeatherLead = std::chrono::days{30};

inline WeatherHistory generate_weather(const ScenarioSpec& spec, const SiteSpec& site, Rng& rng) {
  const Timestamp from = spec.begin() - kWeatherLead;
  const Timestamp to = spec.end();
  std::vector<WeatherSample> samples;
  double day_offset = 0.0;
  double cloud_level = 0.0, wind_level = 0.0;
  std::optional<Date> current;
  for (Timestamp t = from; t < to; t += kHour) {
    const Date day = local_date(t, site.tz_offset);
    if (!current || *current != day) {
      current = day;
      day_offset = 0.7 * day_offset + 1.5 * rng.normal();
      cloud_level = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.3) : rng.uniform(0.5, 1.0);
      wind_level = rng.uniform(0.3, 3.0);
    }
    const double h = local_hour(t, site.tz_offset);
    WeatherSample w;
    w.at = t;
    w.cloud_cover = round_to(std::clamp(cloud_level + 0.1 * rng.normal(), 0.0, 1.0), 0.01);
    w.outdoor_temp_c = round_to(site.outdoor_mean_c + day_offset +
                                    site.outdoor_amplitude_c * std::sin(2.0 * std::numbers::pi * (h - 9.0) / 24.0),
                                0.01);
    w.wind_speed_ms = round_to(std::max(0.0, wind_level + 0.5 * rng.normal()), 0.01);
    samples.push_back(w);
  }
  return WeatherHistory(site.site_id, std::move(samples));
}

/// Cloud cover in force at `t` (the hourly sample at or before it).
inline double cloud_at(const WeatherHistory& weather, Timestamp t) {
  const auto s = weather.samples();
  const auto it = std::upper_bound(s.begin(), s.end(), t, [](Timestamp x, const WeatherSample& w) { return x < w.at; });
  return it == s.begin() ? 0.0 : std::prev(it)->cloud_cover;
}

inline std::vector<Timestamp> grid(Timestamp from, Timestamp to, Seconds step) {
  std::vector<Timestamp> out;
  for (Timestamp t = from; t < to; t += step) out.push_back(t);
  return out;
}

/// Start times of window-opening events on local school days between 09:00 and 15:00,
/// at least three hours apart.
inline std::vector<Timestamp> pick_events(const ScenarioSpec& spec, const SiteSpec& site, int count, Rng& rng) {
  std::vector<Date> school_days;
  for (Date d = spec.start; std::chrono::sys_days{d} < std::chrono::sys_days{add_days(spec.start, spec.days)};
       d = next_day(d)) {
    const Timestamp first = local_midnight(d, site.tz_offset) + std::chrono::hours{9};
    if (!is_weekend(d) && first >= spec.begin() && first + std::chrono::hours{8} <= spec.end()) {
      school_days.push_back(d);
    }
  }
  std::vector<Timestamp> out;
  if (school_days.empty()) return out;
  for (int attempt = 0; static_cast<int>(out.size()) < count && attempt < count * 200; ++attempt) {
    const Date d = school_days[rng.index(school_days.size())];
    const auto minute = static_cast<long>(rng.index(6 * 60));
    const Timestamp t = local_midnight(d, site.tz_offset) + std::chrono::hours{9} + Minutes{minute};
    const bool clash = std::any_of(out.begin(), out.end(), [&](Timestamp e) {
      return abs(e - t) < std::chrono::hours{3};
    });
    if (!clash) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double event_offset(const ThermalModel& m, std::span<const Timestamp> events, Timestamp t) {
  double total = 0.0;
  const double drop_s = m.event_drop_minutes * 60.0;
  const double rec_s = m.event_recovery_minutes * 60.0;
  for (const Timestamp e : events) {
    const double x = static_cast<double>((t - e).count());
    if (x < 0.0 || x >= drop_s + rec_s) continue;
    total -= x < drop_s ? m.event_drop_c * x / drop_s : m.event_drop_c * (1.0 - (x - drop_s) / rec_s);
  }
  return total;
}

struct RoomSignal {
  std::vector<Sample> indoor;
  std::vector<Sample> humidity;
};

inline RoomSignal generate_room(const ScenarioSpec& spec, const SiteSpec& site, const RoomSpec& room,
                                const WeatherHistory& weather, std::span<const Timestamp> events, Rng& rng) {
  const ThermalModel& m = spec.thermal;
  const double dt_h = static_cast<double>(spec.sensing_rate.count()) / 3600.0;
  const double swing = room.insulation == Insulation::Poor ? m.poor_swing_c : m.good_swing_c;
  const double shade = room.blinds ? m.blinds_transmission : 1.0;
  const double phi = std::exp(-dt_h / m.drift_hours);
  const double drift_step = m.drift_sigma_c * std::sqrt(1.0 - phi * phi);
  const double gain_rate = m.solar_gain_c / m.solar_lag_hours;

  double solar = 0.0, drift = 0.0;
  RoomSignal out;
  // Two days of spin-up so the solar state starts in its periodic regime.
  const Timestamp spin_up = spec.begin() - std::chrono::days{2};
  for (Timestamp t = spin_up; t < spec.end(); t += spec.sensing_rate) {
    const double h = local_hour(t, site.tz_offset);
    const double input = (1.0 - cloud_at(weather, t)) * orientation_gain(h, room.orientation) * shade;
    solar += dt_h * (gain_rate * input - solar / m.solar_lag_hours);
    drift = phi * drift + drift_step * rng.normal();
    const double noise = m.noise_sigma_c * rng.normal();
    const double rh_noise = rng.normal();
    if (t < spec.begin()) continue;
    const double temp = site.indoor_base_c + swing * (diurnal_shape(h) + 1.0) / 2.0 + solar + drift +
                        event_offset(m, events, t) + noise;
    out.indoor.push_back({t, round_to(temp, 0.01)});
    if (spec.humidity) {
      const double rh = 45.0 + 8.0 * std::sin(2.0 * std::numbers::pi * (h - 4.0) / 24.0) - 2.0 * drift + 0.5 * rh_noise;
      out.humidity.push_back({t, round_to(std::clamp(rh, 1.0, 100.0), 0.1)});
    }
  }
  return out;
}

/// Deletes exactly round(fraction * n) samples in hour-aligned blocks; returns the kept mask.
inline std::vector<bool> outage_mask(std::size_t n, Seconds step, const InjectionRates& rates, double fraction,
                                     Rng& rng, std::size_t& deleted) {
  std::vector<bool> keep(n, true);
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  const std::size_t per_hour = std::max<std::size_t>(1, static_cast<std::size_t>(3600 / step.count()));
  const std::size_t hour_slots = (n + per_hour - 1) / per_hour;
  deleted = 0;
  while (deleted < target) {
    const auto hours = static_cast<std::size_t>(rates.outage_block_min_hours) +
                       rng.index(static_cast<std::size_t>(rates.outage_block_max_hours - rates.outage_block_min_hours + 1));
    const std::size_t first = rng.index(hour_slots) * per_hour;
    for (std::size_t k = first; k < std::min(n, first + hours * per_hour) && deleted < target; ++k) {
      if (keep[k]) {
        keep[k] = false;
        ++deleted;
      }
    }
  }
  return keep;
}

struct SensorBuild {
  SensorMeta meta;
  std::vector<Sample> clean;
  std::optional<OutlierKind> outlier_kind;
  double outlier_rate = 0.0;
};

inline void inject(const ScenarioSpec& spec, const SiteSpec& site, SensorBuild& build, std::uint32_t site_index,
                   std::uint32_t stream, Scenario& out) {
  Rng rng(spec.seed, site_index, stream);
  SensorTruth truth;
  truth.expected = build.clean.size();
  const double fraction = site.outage_fraction >= 0.0 ? site.outage_fraction : spec.injection.outage_fraction;
  const std::vector<bool> keep =
      outage_mask(build.clean.size(), build.meta.sensing_rate, spec.injection, fraction, rng, truth.deleted);

  std::optional<Timestamp> gap_start;
  std::vector<Sample> kept;
  kept.reserve(build.clean.size() - truth.deleted);
  for (std::size_t k = 0; k < build.clean.size(); ++k) {
    if (keep[k]) {
      if (gap_start) truth.outages.push_back({*gap_start, build.clean[k].at});
      gap_start.reset();
      kept.push_back(build.clean[k]);
    } else if (!gap_start) {
      gap_start = build.clean[k].at;
    }
  }
  if (gap_start) truth.outages.push_back({*gap_start, spec.end()});

  if (build.outlier_kind && build.outlier_rate > 0.0 && !kept.empty()) {
    const auto count = static_cast<std::size_t>(std::llround(build.outlier_rate * static_cast<double>(kept.size())));
    std::vector<std::size_t> order(kept.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = 0; k < count; ++k) std::swap(order[k], order[k + rng.index(order.size() - k)]);
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<long>(count));
    std::sort(chosen.begin(), chosen.end());
    for (const auto idx : chosen) {
      const double value = *build.outlier_kind == OutlierKind::ZeroError ? 0.0 : round_to(kept[idx].value * 10.0, 1.0);
      kept[idx].value = value;
      truth.outliers.push_back({kept[idx].at, *build.outlier_kind, value});
    }
  }
  out.truth.sensors[build.meta.sensor_id] = std::move(truth);
  out.series.emplace(build.meta.sensor_id, TimeSeries(build.meta.sensor_id, std::move(kept)));
}

}  // namespace detail

/// Builds the catalog, measurements, weather and ground truth of a scenario.
/// Identical specs (seed included) yield identical output.
inline Scenario generate(const ScenarioSpec& spec) {
  validate(spec);
  Scenario out;
  out.spec = spec;
  std::vector<Site> sites;
  std::vector<SensorMeta> sensors;
  std::vector<std::pair<std::size_t, detail::SensorBuild>> builds;  // (site index, sensor)

  for (std::uint32_t si = 0; si < spec.sites.size(); ++si) {
    const SiteSpec& ss = spec.sites[si];
    Site site;
    site.site_id = ss.site_id;
    site.latitude = ss.latitude;
    site.longitude = ss.longitude;
    site.start_time = spec.begin();
    site.tz_offset = ss.tz_offset;
    site.zero_implausible_indoor = true;

    Rng weather_rng(spec.seed, si, 0);
    const WeatherHistory weather = detail::generate_weather(spec, ss, weather_rng);

    for (std::uint32_t ri = 0; ri < ss.rooms.size(); ++ri) {
      const RoomSpec& rs = ss.rooms[ri];
      site.rooms.push_back({rs.room_id, ss.site_id, rs.orientation,
                            std::string(to_string(rs.insulation)) + (rs.blinds ? ", blinds" : ", no blinds")});
      Rng room_rng(spec.seed, si, 100 + ri);
      const int event_count = rs.events >= 0 ? rs.events : spec.events_per_room;
      const auto events = detail::pick_events(spec, ss, event_count, room_rng);
      auto signal = detail::generate_room(spec, ss, rs, weather, events, room_rng);

      RoomTruth rt{ss.site_id, rs.room_id, rs.orientation, rs.insulation, rs.blinds, events};
      out.truth.rooms.emplace(room_key(ss.site_id, rs.room_id), std::move(rt));

      detail::SensorBuild t;
      t.meta = {indoor_sensor_id(ss.site_id, rs.room_id), ss.site_id, rs.room_id, SensorKind::IndoorTemperature,
                spec.sensing_rate};
      t.clean = std::move(signal.indoor);
      t.outlier_kind = OutlierKind::ZeroError;
      t.outlier_rate = spec.injection.zero_error_rate;
      builds.emplace_back(si, std::move(t));
      if (spec.humidity) {
        detail::SensorBuild h;
        h.meta = {humidity_sensor_id(ss.site_id, rs.room_id), ss.site_id, rs.room_id, SensorKind::RelativeHumidity,
                  spec.sensing_rate};
        h.clean = std::move(signal.humidity);
        h.outlier_kind = OutlierKind::ZeroError;
        h.outlier_rate = spec.injection.zero_error_rate;
        builds.emplace_back(si, std::move(h));
      }
    }

    if (spec.power) {
      Rng rng(spec.seed, si, 1);
      detail::SensorBuild p;
      p.meta = {power_sensor_id(ss.site_id), ss.site_id, std::nullopt, SensorKind::PowerPhase, spec.power_sensing_rate};
      for (const Timestamp t : detail::grid(spec.begin(), spec.end(), spec.power_sensing_rate)) {
        const bool school_day = !is_weekend(local_date(t, ss.tz_offset));
        const double h = detail::local_hour(t, ss.tz_offset);
        const double watts = 2000.0 + (school_day ? 8000.0 * detail::load_bump(h) : 0.0) + 50.0 * rng.normal();
        p.clean.push_back({t, detail::round_to(std::max(0.0, watts), 1.0)});
      }
      p.outlier_kind = OutlierKind::Spike;
      p.outlier_rate = spec.injection.spike_rate;
      builds.emplace_back(si, std::move(p));
    }
    if (spec.station) {
      Rng rng(spec.seed, si, 2);
      detail::SensorBuild pres;
      pres.meta = {pressure_sensor_id(ss.site_id), ss.site_id, std::nullopt, SensorKind::AtmosphericPressure,
                   spec.station_sensing_rate};
      detail::SensorBuild tout;
      tout.meta = {outdoor_sensor_id(ss.site_id), ss.site_id, std::nullopt, SensorKind::OutdoorTemperature,
                   spec.station_sensing_rate};
      for (const Timestamp t : detail::grid(spec.begin(), spec.end(), spec.station_sensing_rate)) {
        const double days = static_cast<double>((t - spec.begin()).count()) / 86400.0;
        pres.clean.push_back(
            {t, detail::round_to(1013.0 + 5.0 * std::sin(2.0 * std::numbers::pi * days / 7.0) + 0.3 * rng.normal(), 0.1)});
        const WeatherSample* w = weather.nearest(t, Seconds{1800});
        const double outdoor = w != nullptr ? w->outdoor_temp_c : ss.outdoor_mean_c;
        tout.clean.push_back({t, detail::round_to(outdoor + 0.1 * rng.normal(), 0.01)});
      }
      builds.emplace_back(si, std::move(pres));
      builds.emplace_back(si, std::move(tout));
    }
    out.weather.emplace(ss.site_id, weather);
    sites.push_back(std::move(site));
  }

  std::uint32_t stream = 1000;
  for (auto& [si, build] : builds) {
    sensors.push_back(build.meta);
    detail::inject(spec, spec.sites[si], build, static_cast<std::uint32_t>(si), stream++, out);
  }
  out.catalog = DeploymentCatalog(std::move(sites), std::move(sensors));
  return out;
}

inline std::string serialize_ground_truth(const GroundTruth& truth) {
  Json root;
  root["sensors"] = Json::object();
  for (const auto& [id, st] : truth.sensors) {
    Json js;
    js["expected"] = st.expected;
    js["deleted"] = st.deleted;
    js["outages"] = Json::array();
    for (const auto& g : st.outages) js["outages"].push_back({format_timestamp(g.from), format_timestamp(g.to)});
    js["outliers"] = Json::array();
    for (const auto& o : st.outliers) {
      js["outliers"].push_back(
          {{"at", format_timestamp(o.at)}, {"kind", std::string(to_string(o.kind))}, {"value", o.value}});
    }
    root["sensors"][id] = std::move(js);
  }
  root["rooms"] = Json::object();
  for (const auto& [key, rt] : truth.rooms) {
    Json jr;
    jr["site_id"] = rt.site_id;
    jr["room_id"] = rt.room_id;
    jr["orientation"] = std::string(to_string(rt.orientation));
    jr["insulation"] = std::string(to_string(rt.insulation));
    jr["blinds"] = rt.blinds;
    jr["events"] = Json::array();
    for (const auto t : rt.events) jr["events"].push_back(format_timestamp(t));
    root["rooms"][key] = std::move(jr);
  }
  return root.dump(1) + "\n";
}

struct WrittenScenario {
  std::size_t sites = 0;
  std::size_t sensors = 0;
  std::size_t samples = 0;
};

/// Writes the scenario in the ingestion formats plus `ground_truth.json` and a
/// ready-to-use `config.json` for the analysis commands.
inline WrittenScenario write_scenario(const Scenario& scenario, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "measurements", ec);
  if (!ec) std::filesystem::create_directories(out_dir / "weather", ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  WrittenScenario summary;
  write_file(out_dir / "catalog.json", serialize_catalog(scenario.catalog));
  for (const auto& site : scenario.catalog.sites()) {
    std::string body(kMeasurementHeader);
    body.push_back('\n');
    for (const auto& [id, ts] : scenario.series) {
      const SensorMeta* meta = scenario.catalog.find_sensor(id);
      if (meta == nullptr || meta->site_id != site.site_id) continue;
      append_measurements(body, ts);
      summary.samples += ts.size();
      ++summary.sensors;
    }
    write_file(out_dir / "measurements" / (site.site_id + ".csv"), body);
    if (const auto it = scenario.weather.find(site.site_id); it != scenario.weather.end()) {
      write_file(out_dir / "weather" / (site.site_id + ".csv"), serialize_weather(it->second));
    }
    ++summary.sites;
  }
  write_file(out_dir / "ground_truth.json", serialize_ground_truth(scenario.truth));

  Json cfg;
  cfg["catalog"] = "catalog.json";
  cfg["measurements"] = "measurements";
  cfg["weather"] = "weather";
  cfg["data_root"] = "store";
  cfg["out"] = "reports";
  cfg["from"] = format_date(scenario.spec.start);
  cfg["to"] = format_date(add_days(scenario.spec.start, scenario.spec.days));
  write_file(out_dir / "config.json", cfg.dump(2) + "\n");
  return summary;
}

}  // namespace bta::synth
