#pragma once

// Reading and writing of the on-disk formats: the deployment catalog (JSON),
// measurement CSV, hourly weather CSV, and the partitioned series store.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bta/core.hpp"
#include "bta/csv.hpp"
#include "bta/error.hpp"
#include "bta/time.hpp"
#include "json.hpp"

namespace bta {

using Json = nlohmann::json;

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column_at(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

/// Parses JSON text, reporting syntax errors with line and column.
inline Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    // nlohmann reports the 1-based index of the offending byte.
    const auto [line, column] = line_column_at(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(std::string(what) + " syntax error: " + e.what(), line, column);
  }
}

template <typename T>
T required(const Json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) throw ValidationError(context + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(context + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

template <typename T>
T optional_field(const Json& obj, const char* key, T fallback, const std::string& context) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return required<T>(obj, key, context);
}

inline void check_path_component(const std::string& id, const char* what) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos) {
    throw InvalidArgument(std::string("invalid ") + what + " '" + id + "' for use as a path component");
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return std::move(buf).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

using detail::read_file;
using detail::write_file;

// ---------------------------------------------------------------------------
// Catalog

/// Parses and validates a deployment catalog document.
///
/// Layout: `{"sites": [{"site_id", "latitude", "longitude", "start_time",
/// "tz_offset_minutes", "zero_implausible_indoor"?, "rooms": [{"room_id",
/// "orientation", "label"?}]}], "sensors": [{"sensor_id", "site_id",
/// "room_id"?, "kind", "sensing_rate"?, "unit"?}]}`.
inline DeploymentCatalog parse_catalog(std::string_view document) {
  const Json root = detail::parse_json(document, "catalog");
  if (!root.is_object()) throw ValidationError("catalog: top level must be an object");

  std::vector<Site> sites;
  const Json sites_json = root.value("sites", Json::array());
  if (!sites_json.is_array()) throw ValidationError("catalog: 'sites' must be an array");
  for (std::size_t i = 0; i < sites_json.size(); ++i) {
    const Json& js = sites_json[i];
    const std::string ctx = "catalog sites[" + std::to_string(i) + "]";
    Site site;
    site.site_id = detail::required<std::string>(js, "site_id", ctx);
    site.latitude = detail::optional_field<double>(js, "latitude", 0.0, ctx);
    site.longitude = detail::optional_field<double>(js, "longitude", 0.0, ctx);
    try {
      site.start_time = parse_timestamp(detail::required<std::string>(js, "start_time", ctx));
    } catch (const ParseError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
    site.tz_offset = Minutes{detail::optional_field<int>(js, "tz_offset_minutes", 0, ctx)};
    site.zero_implausible_indoor = detail::optional_field<bool>(js, "zero_implausible_indoor", true, ctx);
    const Json rooms = js.value("rooms", Json::array());
    for (std::size_t r = 0; r < rooms.size(); ++r) {
      const std::string rctx = ctx + ".rooms[" + std::to_string(r) + "]";
      Classroom room;
      room.room_id = detail::required<std::string>(rooms[r], "room_id", rctx);
      room.site_id = site.site_id;
      const auto orientation = parse_orientation(detail::required<std::string>(rooms[r], "orientation", rctx));
      if (!orientation) throw ValidationError(rctx + ": unknown orientation");
      room.orientation = *orientation;
      room.label = detail::optional_field<std::string>(rooms[r], "label", "", rctx);
      site.rooms.push_back(std::move(room));
    }
    sites.push_back(std::move(site));
  }

  std::vector<SensorMeta> sensors;
  const Json sensors_json = root.value("sensors", Json::array());
  if (!sensors_json.is_array()) throw ValidationError("catalog: 'sensors' must be an array");
  for (std::size_t i = 0; i < sensors_json.size(); ++i) {
    const Json& js = sensors_json[i];
    const std::string ctx = "catalog sensors[" + std::to_string(i) + "]";
    SensorMeta meta;
    meta.sensor_id = detail::required<std::string>(js, "sensor_id", ctx);
    meta.site_id = detail::required<std::string>(js, "site_id", ctx);
    if (js.contains("room_id") && !js.at("room_id").is_null()) {
      meta.room_id = detail::required<std::string>(js, "room_id", ctx);
    }
    const auto kind = parse_sensor_kind(detail::required<std::string>(js, "kind", ctx));
    if (!kind) throw ValidationError(ctx + ": unknown sensor kind");
    meta.kind = *kind;
    meta.sensing_rate = Seconds{detail::optional_field<long>(js, "sensing_rate", 30, ctx)};
    if (js.contains("unit")) {
      const auto unit = detail::required<std::string>(js, "unit", ctx);
      if (unit != unit_of(meta.kind)) {
        throw ValidationError(ctx + ": unit '" + unit + "' does not match kind " + std::string(to_string(meta.kind)) +
                              " (expected '" + std::string(unit_of(meta.kind)) + "')");
      }
    }
    sensors.push_back(std::move(meta));
  }
  return DeploymentCatalog(std::move(sites), std::move(sensors));
}

inline std::string serialize_catalog(const DeploymentCatalog& catalog) {
  Json root;
  root["sites"] = Json::array();
  for (const auto& site : catalog.sites()) {
    Json js;
    js["site_id"] = site.site_id;
    js["latitude"] = site.latitude;
    js["longitude"] = site.longitude;
    js["start_time"] = format_timestamp(site.start_time);
    js["tz_offset_minutes"] = site.tz_offset.count();
    js["zero_implausible_indoor"] = site.zero_implausible_indoor;
    js["rooms"] = Json::array();
    for (const auto& room : site.rooms) {
      js["rooms"].push_back(
          {{"room_id", room.room_id}, {"orientation", std::string(to_string(room.orientation))}, {"label", room.label}});
    }
    root["sites"].push_back(std::move(js));
  }
  root["sensors"] = Json::array();
  for (const auto& s : catalog.sensors()) {
    Json js;
    js["sensor_id"] = s.sensor_id;
    js["site_id"] = s.site_id;
    js["room_id"] = s.room_id ? Json(*s.room_id) : Json(nullptr);
    js["kind"] = std::string(to_string(s.kind));
    js["unit"] = std::string(unit_of(s.kind));
    js["sensing_rate"] = s.sensing_rate.count();
    root["sensors"].push_back(std::move(js));
  }
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Measurements

inline constexpr std::string_view kMeasurementHeader = "sensor_id,timestamp,value";

enum class RejectReason { UnknownSensor, BeforeSiteStart };

inline std::string_view to_string(RejectReason r) {
  return r == RejectReason::UnknownSensor ? "unknown_sensor" : "before_site_start";
}

struct RejectedLine {
  std::size_t line = 0;
  std::string sensor_id;
  RejectReason reason = RejectReason::UnknownSensor;
};

struct MeasurementSet {
  std::map<std::string, TimeSeries> series;
  std::vector<RejectedLine> rejects;
};

/// Groups measurement lines per sensor, sorted by time. For repeated
/// (sensor, timestamp) pairs the last line wins. Lines for sensors missing
/// from the catalog, or dated before their site's start, are quarantined.
inline MeasurementSet parse_measurements(std::string_view document, const DeploymentCatalog& catalog) {
  struct Row {
    Timestamp at;
    double value;
  };
  csv::LineReader reader(document);
  std::string_view line;
  if (!reader.next(line) || line != kMeasurementHeader) {
    throw ParseError("expected header '" + std::string(kMeasurementHeader) + "'", 1);
  }

  std::unordered_map<std::string, const SensorMeta*> known;
  for (const auto& s : catalog.sensors()) known.emplace(s.sensor_id, &s);
  std::map<std::string, std::vector<Row>> rows;
  MeasurementSet out;
  std::string key;

  while (reader.next(line)) {
    const std::size_t lineno = reader.line_number();
    if (line.empty()) throw ParseError("empty line", lineno);
    const auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw ParseError("expected 3 fields, found " + std::to_string(fields.size()), lineno);
    }
    if (fields[0].empty()) throw ParseError("empty sensor_id", lineno, 1);
    Timestamp at;
    try {
      at = parse_timestamp(fields[1]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno, fields[0].size() + 2);
    }
    double value = 0.0;
    if (!csv::parse_double(fields[2], value)) {
      throw ParseError("value '" + std::string(fields[2]) + "' is not a finite number", lineno,
                       fields[0].size() + fields[1].size() + 3);
    }
    key.assign(fields[0]);
    const auto it = known.find(key);
    if (it == known.end()) {
      out.rejects.push_back({lineno, key, RejectReason::UnknownSensor});
      continue;
    }
    if (at < catalog.site_of(*it->second).start_time) {
      out.rejects.push_back({lineno, key, RejectReason::BeforeSiteStart});
      continue;
    }
    rows[key].push_back({at, value});
  }

  for (auto& [sensor_id, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.at < b.at; });
    std::vector<Sample> samples;
    samples.reserve(list.size());
    for (const auto& r : list) {
      if (!samples.empty() && samples.back().at == r.at) {
        samples.back().value = r.value;
      } else {
        samples.push_back({r.at, r.value});
      }
    }
    out.series.emplace(sensor_id, TimeSeries(sensor_id, std::move(samples)));
  }
  return out;
}

inline void append_measurements(std::string& out, const TimeSeries& series) {
  for (const auto& s : series) {
    out += series.sensor_id();
    out.push_back(',');
    out += format_timestamp(s.at);
    out.push_back(',');
    out += csv::format_double(s.value);
    out.push_back('\n');
  }
}

inline std::string serialize_measurements(const std::map<std::string, TimeSeries>& series) {
  std::string out(kMeasurementHeader);
  out.push_back('\n');
  for (const auto& [id, ts] : series) append_measurements(out, ts);
  return out;
}

// ---------------------------------------------------------------------------
// Weather

inline constexpr std::string_view kWeatherHeader = "site_id,timestamp,outdoor_temp_c,wind_speed_ms,cloud_cover";
inline constexpr Seconds kHour{3600};
inline constexpr Seconds kHourlySpacingTolerance{60};

struct WeatherSample {
  Timestamp at;
  double outdoor_temp_c = 0.0;
  double wind_speed_ms = 0.0;
  double cloud_cover = 0.0;

  friend bool operator==(const WeatherSample&, const WeatherSample&) = default;
};

/// Half-open interval [from, to) with no data.
struct Gap {
  Timestamp from;
  Timestamp to;

  friend bool operator==(const Gap&, const Gap&) = default;
};

/// Hourly outdoor conditions for one site.
class WeatherHistory {
 public:
  WeatherHistory() = default;

  WeatherHistory(std::string site_id, std::vector<WeatherSample> samples, std::vector<Gap> gaps = {})
      : site_id_(std::move(site_id)), samples_(std::move(samples)), gaps_(std::move(gaps)) {
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      if (samples_[i].at <= samples_[i - 1].at) throw InvalidArgument("weather timestamps must strictly increase");
    }
  }

  const std::string& site_id() const noexcept { return site_id_; }
  std::span<const WeatherSample> samples() const noexcept { return samples_; }
  std::span<const Gap> gaps() const noexcept { return gaps_; }
  bool empty() const noexcept { return samples_.empty(); }

  /// Samples with from <= t < to.
  std::span<const WeatherSample> range(Timestamp from, Timestamp to) const {
    const auto lo = std::lower_bound(samples_.begin(), samples_.end(), from,
                                     [](const WeatherSample& s, Timestamp t) { return s.at < t; });
    const auto hi =
        std::lower_bound(lo, samples_.end(), to, [](const WeatherSample& s, Timestamp t) { return s.at < t; });
    return {lo, hi};
  }

  /// Sample closest to `at` within `tolerance`, if any.
  const WeatherSample* nearest(Timestamp at, Seconds tolerance) const {
    const auto candidates = range(at - tolerance, at + tolerance + Seconds{1});
    const WeatherSample* best = nullptr;
    for (const auto& s : candidates) {
      if (best == nullptr || abs(s.at - at) < abs(best->at - at)) best = &s;
    }
    return best;
  }

  friend bool operator==(const WeatherHistory&, const WeatherHistory&) = default;

 private:
  std::string site_id_;
  std::vector<WeatherSample> samples_;
  std::vector<Gap> gaps_;
};

/// Loads one site's hourly weather. Missing hours are allowed and recorded as gaps;
/// spacing that is not a whole number of hours (within one minute) is an error.
inline WeatherHistory load_weather(std::string_view document) {
  csv::LineReader reader(document);
  std::string_view line;
  if (!reader.next(line) || line != kWeatherHeader) {
    throw ParseError("expected header '" + std::string(kWeatherHeader) + "'", 1);
  }
  std::string site_id;
  std::vector<WeatherSample> samples;
  std::vector<Gap> gaps;
  while (reader.next(line)) {
    const std::size_t lineno = reader.line_number();
    const auto f = csv::split(line);
    if (f.size() != 5) throw ParseError("expected 5 fields, found " + std::to_string(f.size()), lineno);
    if (site_id.empty()) {
      site_id.assign(f[0]);
      if (site_id.empty()) throw ParseError("empty site_id", lineno);
    } else if (f[0] != site_id) {
      throw ParseError("weather file mixes sites '" + site_id + "' and '" + std::string(f[0]) + "'", lineno);
    }
    WeatherSample s;
    try {
      s.at = parse_timestamp(f[1]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (!csv::parse_double(f[2], s.outdoor_temp_c) || !csv::parse_double(f[3], s.wind_speed_ms) ||
        !csv::parse_double(f[4], s.cloud_cover)) {
      throw ParseError("non-numeric weather value", lineno);
    }
    if (s.wind_speed_ms < 0.0) throw ParseError("wind speed must be non-negative", lineno);
    if (s.cloud_cover < 0.0 || s.cloud_cover > 1.0) {
      throw ParseError("cloud cover " + std::string(f[4]) + " outside [0, 1]", lineno);
    }
    if (!samples.empty()) {
      const Seconds step = s.at - samples.back().at;
      const long hours = std::lround(static_cast<double>(step.count()) / static_cast<double>(kHour.count()));
      if (hours < 1 || abs(step - hours * kHour) > kHourlySpacingTolerance) {
        throw ParseError("non-hourly spacing of " + std::to_string(step.count()) + " s", lineno);
      }
      if (hours > 1) gaps.push_back({samples.back().at + kHour, s.at});
    }
    samples.push_back(s);
  }
  return WeatherHistory(std::move(site_id), std::move(samples), std::move(gaps));
}

inline std::string serialize_weather(const WeatherHistory& history) {
  std::string out(kWeatherHeader);
  out.push_back('\n');
  for (const auto& s : history.samples()) {
    out += history.site_id() + "," + format_timestamp(s.at) + "," + csv::format_double(s.outdoor_temp_c) + "," +
           csv::format_double(s.wind_speed_ms) + "," + csv::format_double(s.cloud_cover) + "\n";
  }
  return out;
}

/// Source of outdoor conditions. Files today; a remote service can implement the same interface.
class WeatherProvider {
 public:
  virtual ~WeatherProvider() = default;
  virtual std::optional<WeatherHistory> history(const std::string& site_id) const = 0;
};

/// Reads `<dir>/<site_id>.csv`.
class DirectoryWeatherProvider final : public WeatherProvider {
 public:
  explicit DirectoryWeatherProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<WeatherHistory> history(const std::string& site_id) const override {
    detail::check_path_component(site_id, "site_id");
    const auto path = dir_ / (site_id + ".csv");
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
      return load_weather(read_file(path));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }

 private:
  std::filesystem::path dir_;
};

class InMemoryWeatherProvider final : public WeatherProvider {
 public:
  explicit InMemoryWeatherProvider(std::map<std::string, WeatherHistory> histories)
      : histories_(std::move(histories)) {}

  std::optional<WeatherHistory> history(const std::string& site_id) const override {
    const auto it = histories_.find(site_id);
    if (it == histories_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::string, WeatherHistory> histories_;
};

// ---------------------------------------------------------------------------
// Series store
//
// <root>/<site_id>/<sensor_id>/<YYYY-MM-DD>.csv   one UTC day per file
// <root>/<site_id>/<sensor_id>/manifest           date,rows for every partition

enum class StoreStatus { Present, Absent };

struct StoredSeries {
  TimeSeries series;
  StoreStatus status = StoreStatus::Absent;
};

class SeriesStore {
 public:
  explicit SeriesStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Replaces every stored partition of the sensor with the contents of `series`.
  void store(const std::string& site_id, const TimeSeries& series) {
    detail::check_path_component(site_id, "site_id");
    detail::check_path_component(series.sensor_id(), "sensor_id");
    const auto dir = root_ / site_id / series.sensor_id();
    std::lock_guard partition_lock(partition_mutex(dir.string()));
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

    std::string manifest = "date,rows\n";
    std::size_t i = 0;
    const auto samples = series.samples();
    while (i < samples.size()) {
      const Date day{std::chrono::floor<std::chrono::days>(samples[i].at)};
      const Timestamp next = start_of_day(next_day(day));
      std::string body = "timestamp,value\n";
      std::size_t rows = 0;
      for (; i < samples.size() && samples[i].at < next; ++i, ++rows) {
        body += format_timestamp(samples[i].at);
        body.push_back(',');
        body += csv::format_double(samples[i].value);
        body.push_back('\n');
      }
      write_file(dir / (format_date(day) + ".csv"), body);
      manifest += format_date(day) + "," + std::to_string(rows) + "\n";
    }
    const auto tmp = dir / "manifest.tmp";
    write_file(tmp, manifest);
    std::filesystem::rename(tmp, dir / "manifest", ec);
    if (ec) throw IoError("cannot finalize manifest in '" + dir.string() + "': " + ec.message());
  }

  /// Loads a sensor's series; a sensor never stored yields an empty series with status Absent.
  StoredSeries load(const std::string& site_id, const std::string& sensor_id) const {
    detail::check_path_component(site_id, "site_id");
    detail::check_path_component(sensor_id, "sensor_id");
    const auto dir = root_ / site_id / sensor_id;
    const auto manifest_path = dir / "manifest";
    if (!std::filesystem::exists(manifest_path)) return {TimeSeries(sensor_id), StoreStatus::Absent};

    const std::string manifest = read_file(manifest_path);
    csv::LineReader reader(manifest);
    std::string_view line;
    if (!reader.next(line) || line != "date,rows") throw IntegrityError("corrupt manifest in '" + dir.string() + "'");
    std::vector<Sample> samples;
    while (reader.next(line)) {
      const auto f = csv::split(line);
      double expected_rows = 0;
      if (f.size() != 2 || !csv::parse_double(f[1], expected_rows)) {
        throw IntegrityError("corrupt manifest line " + std::to_string(reader.line_number()) + " in '" +
                             dir.string() + "'");
      }
      const auto part = dir / (std::string(f[0]) + ".csv");
      if (!std::filesystem::exists(part)) throw IntegrityError("missing partition '" + part.string() + "'");
      const std::string body = read_file(part);
      csv::LineReader rows(body);
      std::string_view row;
      if (!rows.next(row) || row != "timestamp,value") throw IntegrityError("bad header in '" + part.string() + "'");
      std::size_t count = 0;
      while (rows.next(row)) {
        const auto cells = csv::split(row);
        Sample s;
        try {
          if (cells.size() != 2) throw ParseError("bad row");
          s.at = parse_timestamp(cells[0]);
        } catch (const ParseError&) {
          throw IntegrityError("corrupt row " + std::to_string(rows.line_number()) + " in '" + part.string() + "'");
        }
        if (!csv::parse_double(cells[1], s.value)) {
          throw IntegrityError("corrupt value at row " + std::to_string(rows.line_number()) + " in '" +
                               part.string() + "'");
        }
        samples.push_back(s);
        ++count;
      }
      if (static_cast<double>(count) != expected_rows) {
        throw IntegrityError("partition '" + part.string() + "' holds " + std::to_string(count) +
                             " rows but the manifest records " + std::string(f[1]));
      }
    }
    try {
      return {TimeSeries(sensor_id, std::move(samples)), StoreStatus::Present};
    } catch (const InvalidArgument& e) {
      throw IntegrityError("stored series '" + sensor_id + "' is not ordered: " + e.what());
    }
  }

  /// Sensor ids stored under a site, sorted.
  std::vector<std::string> sensors(const std::string& site_id) const {
    std::vector<std::string> out;
    const auto dir = root_ / site_id;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest")) {
        out.push_back(entry.path().filename().string());
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// True when no sensor of any site has been stored.
  bool empty() const {
    if (!std::filesystem::is_directory(root_)) return true;
    for (const auto& site : std::filesystem::directory_iterator(root_)) {
      if (site.is_directory() && !sensors(site.path().filename().string()).empty()) return false;
    }
    return true;
  }

 private:
  std::mutex& partition_mutex(const std::string& key) {
    std::lock_guard lock(registry_mutex_);
    auto& slot = partition_mutexes_[key];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

  std::filesystem::path root_;
  std::mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> partition_mutexes_;
};

}  // namespace bta
