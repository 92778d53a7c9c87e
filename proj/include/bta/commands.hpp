#pragma once

// Pipeline commands behind the `bta` executable. Each returns a process exit code:
// 0 success, 1 environment or I/O failure, 2 usage or configuration error.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "bta/comfort.hpp"
#include "bta/core.hpp"
#include "bta/csv.hpp"
#include "bta/error.hpp"
#include "bta/ingest.hpp"
#include "bta/performance.hpp"
#include "bta/quality.hpp"
#include "bta/synthgen.hpp"
#include "bta/time.hpp"

namespace bta {

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitUsage = 2 };

/// Raised for unusable command input; always maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::filesystem::path data_root = "store";
  std::filesystem::path catalog = "catalog.json";
  std::filesystem::path measurements = "measurements";
  std::filesystem::path weather = "weather";
  std::filesystem::path out = "reports";
  std::optional<Date> from;
  std::optional<Date> to;  // exclusive
  Acceptability acceptability = Acceptability::Percent80;
  QualityConfig quality;
  int pmo_lookback_days = 7;
  double swing_threshold_c = 8.0;
  int swing_min_days = 2;
  double r_threshold = 0.5;
  EventConfig events;
  OrientationGainTable orientation_gain = kDefaultOrientationGain;

  std::filesystem::path raw_store() const { return data_root / "raw"; }
  std::filesystem::path repaired_store() const { return data_root / "repaired"; }
};

/// Every key accepted in a config file; each can also be set through the
/// environment as BTA_<KEY> (upper case).
inline constexpr std::array<std::string_view, 23> kConfigKeys = {
    "data_root",          "catalog",           "measurements",     "weather",          "out",
    "from",               "to",                "acceptability",    "environmental_window_s",
    "power_window_s",     "fill_window_s",     "smooth_window_s",  "spike_factor",     "min_window_samples",
    "pmo_lookback_days",  "swing_threshold_c", "swing_min_days",   "r_threshold",      "event_drop_c",
    "event_within_s",     "event_recovery_s",  "event_min_dip_s",  "orientation_gain"};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

struct ConfigOverrides {
  std::optional<Date> from;
  std::optional<Date> to;
  std::optional<std::filesystem::path> out;
  std::optional<int> acceptability;
};

namespace detail {

inline double number_value(const Json& v, std::string_view key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    double out = 0.0;
    if (csv::parse_double(v.get<std::string>(), out)) return out;
  }
  throw UsageError("config key '" + std::string(key) + "' must be a number");
}

inline long integer_value(const Json& v, std::string_view key) {
  const double d = number_value(v, key);
  if (d != std::floor(d)) throw UsageError("config key '" + std::string(key) + "' must be an integer");
  return static_cast<long>(d);
}

inline std::string string_value(const Json& v, std::string_view key) {
  if (!v.is_string()) throw UsageError("config key '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

inline Date date_value(const Json& v, std::string_view key) {
  try {
    return parse_date(string_value(v, key));
  } catch (const ParseError& e) {
    throw UsageError("config key '" + std::string(key) + "': " + e.what());
  }
}

/// Partial override of the facade gain table: {"SW": {"peak_shift_hours": 2, "amplitude": 1}, ...}.
/// A string value (from the environment) is parsed as JSON first.
inline void apply_orientation_gain(OrientationGainTable& table, const Json& v) {
  const Json j = v.is_string() ? parse_json(v.get<std::string>(), "orientation_gain") : v;
  if (!j.is_object()) throw UsageError("config key 'orientation_gain' must be an object keyed by orientation");
  for (const auto& [name, entry] : j.items()) {
    const auto o = parse_orientation(name);
    if (!o) throw UsageError("orientation_gain: unknown orientation '" + name + "'");
    if (!entry.is_object()) throw UsageError("orientation_gain." + name + " must be an object");
    auto& p = table[static_cast<std::size_t>(*o)];
    if (entry.contains("peak_shift_hours")) p.peak_shift_hours = number_value(entry.at("peak_shift_hours"), name);
    if (entry.contains("amplitude")) p.amplitude = number_value(entry.at("amplitude"), name);
    if (p.amplitude < 0.0) throw UsageError("orientation_gain." + name + ": amplitude must be non-negative");
  }
}

/// Applies one key. Relative paths are resolved against `base` (empty keeps them as given).
inline void apply_key(RunConfig& cfg, std::string_view key, const Json& v, const std::filesystem::path& base) {
  const auto path = [&] {
    std::filesystem::path p = string_value(v, key);
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  const auto seconds = [&] { return Seconds{integer_value(v, key)}; };
  if (key == "data_root") cfg.data_root = path();
  else if (key == "catalog") cfg.catalog = path();
  else if (key == "measurements") cfg.measurements = path();
  else if (key == "weather") cfg.weather = path();
  else if (key == "out") cfg.out = path();
  else if (key == "from") cfg.from = date_value(v, key);
  else if (key == "to") cfg.to = date_value(v, key);
  else if (key == "acceptability") {
    try {
      cfg.acceptability = parse_acceptability(static_cast<int>(integer_value(v, key)));
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  } else if (key == "environmental_window_s") cfg.quality.environmental_window = seconds();
  else if (key == "power_window_s") cfg.quality.power_window = seconds();
  else if (key == "fill_window_s") cfg.quality.fill_window = seconds();
  else if (key == "smooth_window_s") cfg.quality.smooth_window = seconds();
  else if (key == "spike_factor") cfg.quality.spike_factor = number_value(v, key);
  else if (key == "min_window_samples") cfg.quality.min_window_samples = static_cast<std::size_t>(std::max(0L, integer_value(v, key)));
  else if (key == "pmo_lookback_days") cfg.pmo_lookback_days = static_cast<int>(integer_value(v, key));
  else if (key == "swing_threshold_c") cfg.swing_threshold_c = number_value(v, key);
  else if (key == "swing_min_days") cfg.swing_min_days = static_cast<int>(integer_value(v, key));
  else if (key == "r_threshold") cfg.r_threshold = number_value(v, key);
  else if (key == "event_drop_c") cfg.events.drop_c = number_value(v, key);
  else if (key == "event_within_s") cfg.events.within = std::chrono::duration_cast<Minutes>(seconds());
  else if (key == "event_recovery_s") cfg.events.recovery_horizon = seconds();
  else if (key == "event_min_dip_s") cfg.events.min_dip = seconds();
  else if (key == "orientation_gain") apply_orientation_gain(cfg.orientation_gain, v);
  else throw UsageError("unknown config key '" + std::string(key) + "'");
}

inline void validate(const RunConfig& cfg) {
  const auto positive = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string(what) + " must be positive");
  };
  positive(cfg.quality.environmental_window > Seconds{0}, "environmental_window_s");
  positive(cfg.quality.power_window > Seconds{0}, "power_window_s");
  positive(cfg.quality.fill_window > Seconds{0}, "fill_window_s");
  if (cfg.quality.smooth_window < Seconds{0}) throw UsageError("smooth_window_s must be zero or positive");
  positive(cfg.quality.spike_factor > 0.0, "spike_factor");
  positive(cfg.quality.min_window_samples > 0, "min_window_samples");
  positive(cfg.pmo_lookback_days > 0, "pmo_lookback_days");
  positive(cfg.swing_threshold_c > 0.0, "swing_threshold_c");
  positive(cfg.swing_min_days > 0, "swing_min_days");
  positive(cfg.r_threshold > 0.0, "r_threshold");
  positive(cfg.events.drop_c > 0.0, "event_drop_c");
  positive(cfg.events.within > Minutes{0}, "event_within_s");
  positive(cfg.events.recovery_horizon > Seconds{0}, "event_recovery_s");
  if (cfg.events.min_dip < Seconds{0}) throw UsageError("event_min_dip_s must be zero or positive");
  if (cfg.from && cfg.to && std::chrono::sys_days{*cfg.from} >= std::chrono::sys_days{*cfg.to}) {
    throw UsageError("'from' must be before 'to'");
  }
}

}  // namespace detail

/// Builds the run configuration: defaults, then the config file (if any), then
/// BTA_* environment variables, then command-line overrides.
inline RunConfig load_run_config(const std::optional<std::filesystem::path>& config_path, const EnvLookup& env,
                                 const ConfigOverrides& overrides = {}) {
  RunConfig cfg;
  if (config_path) {
    if (!std::filesystem::exists(*config_path)) {
      throw UsageError("config file '" + config_path->string() + "' does not exist");
    }
    Json j;
    try {
      j = detail::parse_json(read_file(*config_path), "config");
    } catch (const ParseError& e) {
      throw UsageError(config_path->string() + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError(config_path->string() + ": top level must be an object");
    const auto base = config_path->parent_path();
    for (const auto& [key, value] : j.items()) detail::apply_key(cfg, key, value, base);
  }
  for (const auto key : kConfigKeys) {
    std::string name = "BTA_";
    for (const char c : key) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (const auto v = env(name)) detail::apply_key(cfg, key, Json(*v), {});
  }
  if (overrides.from) cfg.from = overrides.from;
  if (overrides.to) cfg.to = overrides.to;
  if (overrides.out) cfg.out = *overrides.out;
  if (overrides.acceptability) detail::apply_key(cfg, "acceptability", Json(*overrides.acceptability), {});
  detail::validate(cfg);
  return cfg;
}

namespace detail {

/// Runs fn(i) for i in [0, n) on a small thread pool; rethrows the first failure.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Maps failures to exit codes and reports them on `err`.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IntegrityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

inline void require_exists(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::exists(p)) throw UsageError(std::string(what) + " '" + p.string() + "' does not exist");
}

inline DeploymentCatalog load_catalog(const RunConfig& cfg) {
  require_exists(cfg.catalog, "catalog");
  try {
    return parse_catalog(read_file(cfg.catalog));
  } catch (const ParseError& e) {
    throw UsageError(cfg.catalog.string() + ": " + e.what());
  }
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : std::string()));
  }
}

inline std::pair<Date, Date> require_period(const RunConfig& cfg, const char* command) {
  if (!cfg.from || !cfg.to) throw UsageError(std::string(command) + " needs an analysis period (--from and --to)");
  return {*cfg.from, *cfg.to};
}

/// Indoor temperature series per room of a site, from a store. Rooms without data are left out.
inline std::map<std::string, TimeSeries> room_indoor_series(const SeriesStore& store, const DeploymentCatalog& catalog,
                                                            const Site& site) {
  std::map<std::string, TimeSeries> out;
  for (const auto& room : site.rooms) {
    const auto sensors = catalog.room_sensors(site.site_id, room.room_id, SensorKind::IndoorTemperature);
    if (sensors.empty()) continue;
    auto loaded = store.load(site.site_id, sensors.front()->sensor_id);
    if (loaded.status == StoreStatus::Present && !loaded.series.empty()) {
      out.emplace(room.room_id, std::move(loaded.series));
    }
  }
  return out;
}

/// Raw indoor series with zero-error and spike samples removed. Bound violations are
/// kept: replacing them erases the short drops that event detection looks for.
inline std::optional<TimeSeries> event_series(const SeriesStore& raw, const DeploymentCatalog& catalog,
                                              const Site& site, const std::string& room_id,
                                              const QualityConfig& quality) {
  const auto sensors = catalog.room_sensors(site.site_id, room_id, SensorKind::IndoorTemperature);
  if (sensors.empty()) return std::nullopt;
  auto loaded = raw.load(site.site_id, sensors.front()->sensor_id);
  if (loaded.status != StoreStatus::Present) return std::nullopt;
  const auto flags = flag_outliers(loaded.series, outlier_rules_for(*sensors.front(), site, quality));
  std::vector<bool> drop(loaded.series.size(), false);
  for (const auto& f : flags) drop[f.index] = f.kind != OutlierKind::BoundViolation;
  std::vector<Sample> kept;
  for (std::size_t i = 0; i < loaded.series.size(); ++i) {
    if (!drop[i]) kept.push_back(loaded.series[i]);
  }
  return TimeSeries(loaded.series.sensor_id(), std::move(kept));
}

inline std::vector<const Site*> sites_by_id(const DeploymentCatalog& catalog) {
  std::vector<const Site*> out;
  for (const auto& s : catalog.sites()) out.push_back(&s);
  std::sort(out.begin(), out.end(), [](const Site* a, const Site* b) { return a->site_id < b->site_id; });
  return out;
}

}  // namespace detail

/// Materializes a synthetic scenario from a scenario spec file.
inline int cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir, std::ostream& out,
                     std::ostream& err) {
  return detail::guarded(err, [&] {
    if (!std::filesystem::exists(spec_path)) {
      throw UsageError("scenario spec '" + spec_path.string() + "' does not exist");
    }
    synth::ScenarioSpec spec;
    try {
      spec = synth::parse_scenario(read_file(spec_path));
    } catch (const ParseError& e) {
      throw UsageError(spec_path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
      throw UsageError(spec_path.string() + ": " + e.what());
    }
    const synth::Scenario scenario = synth::generate(spec);
    const auto written = synth::write_scenario(scenario, out_dir);
    out << "synth: " << written.sites << " sites, " << written.sensors << " sensors, " << spec.days << " days from "
        << format_date(spec.start) << ", " << written.samples << " samples\n"
        << "synth: injected outage_fraction=" << csv::format_double(spec.injection.outage_fraction)
        << " zero_error_rate=" << csv::format_double(spec.injection.zero_error_rate)
        << " spike_rate=" << csv::format_double(spec.injection.spike_rate) << "\n";
    return kExitOk;
  });
}

/// Loads measurement files into the raw store and writes quarantined lines to `rejects.csv`.
inline int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const DeploymentCatalog catalog = detail::load_catalog(cfg);
    detail::require_exists(cfg.measurements, "measurements path");
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(cfg.measurements)) {
      for (const auto& e : std::filesystem::directory_iterator(cfg.measurements)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(cfg.measurements);
    }

    std::map<std::string, std::vector<Sample>> merged;
    std::string rejects = "file,line,sensor_id,reason\n";
    std::size_t reject_count = 0, lines = 0;
    for (const auto& file : files) {
      MeasurementSet set;
      try {
        set = parse_measurements(read_file(file), catalog);
      } catch (const ParseError& e) {
        throw UsageError(file.string() + ": " + e.what());
      }
      for (const auto& r : set.rejects) {
        rejects += file.filename().string() + "," + std::to_string(r.line) + "," + r.sensor_id + "," +
                   std::string(to_string(r.reason)) + "\n";
        ++reject_count;
      }
      for (auto& [id, ts] : set.series) {
        auto& dst = merged[id];
        lines += ts.size();
        if (dst.empty()) {
          dst.assign(ts.begin(), ts.end());
          continue;
        }
        // A sensor split across files: later files win on equal timestamps.
        std::vector<Sample> combined;
        combined.reserve(dst.size() + ts.size());
        std::merge(ts.begin(), ts.end(), dst.begin(), dst.end(), std::back_inserter(combined),
                   [](const Sample& a, const Sample& b) { return a.at < b.at; });
        std::vector<Sample> unique;
        unique.reserve(combined.size());
        for (const auto& s : combined) {
          if (unique.empty() || unique.back().at != s.at) unique.push_back(s);
        }
        dst = std::move(unique);
      }
    }

    SeriesStore store(cfg.raw_store());
    std::vector<std::pair<std::string, TimeSeries>> todo;
    for (auto& [id, samples] : merged) todo.emplace_back(id, TimeSeries(id, std::move(samples)));
    detail::parallel_for(todo.size(), [&](std::size_t i) {
      store.store(catalog.find_sensor(todo[i].first)->site_id, todo[i].second);
    });
    detail::ensure_dir(cfg.out);
    write_file(cfg.out / "rejects.csv", rejects);
    out << "ingest: " << files.size() << " files, " << todo.size() << " sensors, " << lines << " samples stored, "
        << reject_count << " lines quarantined\n";
    return kExitOk;
  });
}

/// Availability, outlier repair and quality tables over [from, to).
inline int cmd_quality(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const DeploymentCatalog catalog = detail::load_catalog(cfg);
    const SeriesStore raw(cfg.raw_store());
    if (raw.empty()) throw UsageError("no data in '" + cfg.raw_store().string() + "'; run ingest first");
    if (!cfg.to) throw UsageError("quality needs the end of the assessment period (--to)");
    const Timestamp end = start_of_day(*cfg.to);
    const std::optional<Timestamp> begin =
        cfg.from ? std::optional<Timestamp>(start_of_day(*cfg.from)) : std::nullopt;

    std::vector<const SensorMeta*> sensors;
    for (const auto& s : catalog.sensors()) sensors.push_back(&s);
    std::vector<std::optional<TimeSeries>> loaded(sensors.size());
    detail::parallel_for(sensors.size(), [&](std::size_t i) {
      auto stored = raw.load(sensors[i]->site_id, sensors[i]->sensor_id);
      if (stored.status == StoreStatus::Present) {
        const Timestamp lo = begin ? *begin : catalog.site_of(*sensors[i]).start_time;
        loaded[i] = slice(stored.series, std::min(lo, end), end);
      }
    });

    std::map<std::string, TimeSeries> series;
    std::map<std::string, std::size_t> observed;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      if (!loaded[i]) continue;
      observed[sensors[i]->sensor_id] = loaded[i]->size();
      series.emplace(sensors[i]->sensor_id, std::move(*loaded[i]));
    }
    const auto cells = availability_matrix(series, catalog, end, begin);

    std::vector<std::optional<RepairOutcome>> repaired(sensors.size());
    SeriesStore repaired_store(cfg.repaired_store());
    detail::parallel_for(sensors.size(), [&](std::size_t i) {
      const auto it = series.find(sensors[i]->sensor_id);
      if (it == series.end()) return;
      repaired[i] = repair_series(it->second, *sensors[i], catalog.site_of(*sensors[i]), cfg.quality);
      repaired_store.store(sensors[i]->site_id, repaired[i]->repaired);
    });
    std::map<std::string, RepairOutcome> outcomes;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      if (repaired[i]) outcomes.emplace(sensors[i]->sensor_id, std::move(*repaired[i]));
    }

    const auto site_rows = site_quality_table(catalog, cells, observed, outcomes);
    const auto kind_rows = category_quality_table(catalog, cells, observed, outcomes);
    detail::ensure_dir(cfg.out);
    write_file(cfg.out / "availability.csv", quality_daily_csv(cells, outcomes));
    write_file(cfg.out / "quality_sites.csv", site_quality_csv(site_rows));
    write_file(cfg.out / "quality_kinds.csv", category_quality_csv(kind_rows));
    for (const auto& r : site_rows) {
      out << "quality: site " << r.name << " outage " << csv::format_fixed(r.outage_pct, 2) << "% outliers "
          << csv::format_fixed(r.outlier_pct, 2) << "%\n";
    }
    return kExitOk;
  });
}

/// Adaptive-comfort daily scores per room, per-site distributions and plot data.
inline int cmd_comfort(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const DeploymentCatalog catalog = detail::load_catalog(cfg);
    const auto [from, to] = detail::require_period(cfg, "comfort");
    const SeriesStore store(cfg.repaired_store());
    if (store.empty()) throw UsageError("no repaired data in '" + cfg.repaired_store().string() + "'; run quality first");
    detail::require_exists(cfg.weather, "weather directory");
    const DirectoryWeatherProvider provider(cfg.weather);

    ComfortConfig ccfg;
    ccfg.acceptability = cfg.acceptability;
    ccfg.lookback_days = cfg.pmo_lookback_days;

    std::string daily(kComfortDailyHeader);
    daily.push_back('\n');
    std::string sites_csv = "site_id,room_days,mean,min,q1,median,q3,max,inapplicable_days\n";
    std::string plot = "site_id,date,score\n";
    for (const Site* site : detail::sites_by_id(catalog)) {
      const auto rooms = detail::room_indoor_series(store, catalog, *site);
      if (rooms.empty()) {
        out << "comfort: site " << site->site_id << " has no indoor temperature data, skipped\n";
        continue;
      }
      const auto weather = provider.history(site->site_id);
      if (!weather) throw UsageError("no weather for site '" + site->site_id + "' in '" + cfg.weather.string() + "'");
      const Date lookback_start = add_days(from, -cfg.pmo_lookback_days);
      if (weather->range(local_midnight(lookback_start, site->tz_offset), local_midnight(to, site->tz_offset)).empty()) {
        throw UsageError("weather for site '" + site->site_id + "' does not cover " + format_date(from) + " to " +
                         format_date(to));
      }
      const auto summary = site_comfort_summary(*site, rooms, *weather, from, to, ccfg);
      daily += comfort_daily_csv(summary, cfg.acceptability);

      sites_csv += site->site_id + ",";
      if (const auto& d = summary.distribution) {
        sites_csv += std::to_string(d->count) + "," + csv::format_fixed(d->mean, 4) + "," + csv::format_fixed(d->min, 4) +
                     "," + csv::format_fixed(d->q1, 4) + "," + csv::format_fixed(d->median, 4) + "," +
                     csv::format_fixed(d->q3, 4) + "," + csv::format_fixed(d->max, 4);
      } else {
        sites_csv += "0,,,,,,";
      }
      sites_csv += "," + std::to_string(summary.inapplicable_days.size()) + "\n";

      std::map<int, std::pair<double, int>> per_day;
      for (const auto& [room, scores] : summary.rooms) {
        for (const auto& s : scores) {
          if (!s.score) continue;
          auto& slot = per_day[static_cast<int>(std::chrono::sys_days{s.date}.time_since_epoch().count())];
          slot.first += *s.score;
          ++slot.second;
        }
      }
      for (const auto& [day, acc] : per_day) {
        plot += site->site_id + "," + format_date(Date{std::chrono::sys_days{std::chrono::days{day}}}) + "," +
                csv::format_fixed(acc.first / acc.second, 4) + "\n";
      }
      out << "comfort: site " << site->site_id << " mean score "
          << (summary.distribution ? csv::format_fixed(summary.distribution->mean, 3) : std::string("n/a")) << " ("
          << summary.inapplicable_days.size() << " days outside the model's range)\n";
    }
    detail::ensure_dir(cfg.out);
    write_file(cfg.out / "comfort_daily.csv", daily);
    write_file(cfg.out / "comfort_sites.csv", sites_csv);
    write_file(cfg.out / "comfort_plot.csv", plot);
    return kExitOk;
  });
}

/// Weekend thermal-performance analysis and occupant-event detection.
inline int cmd_perf(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const DeploymentCatalog catalog = detail::load_catalog(cfg);
    const auto [from, to] = detail::require_period(cfg, "perf");
    const SeriesStore store(cfg.repaired_store());
    if (store.empty()) throw UsageError("no repaired data in '" + cfg.repaired_store().string() + "'; run quality first");
    const SeriesStore raw(cfg.raw_store());
    detail::require_exists(cfg.weather, "weather directory");
    const DirectoryWeatherProvider provider(cfg.weather);

    std::string swings_csv = "site_id,room_id,date,min_c,max_c,swing_c,rise_hours\n";
    std::string corr_csv = "site_id,room_id,orientation,r,samples,status\n";
    std::string events_csv = "site_id,room_id,start,trough,recovered,fall_c\n";
    std::vector<AnomalyReport> insulation, events;
    std::vector<CorrelationReport> correlations;
    std::map<std::string, std::string> site_of_room_key;  // correlation room key -> site

    for (const Site* site : detail::sites_by_id(catalog)) {
      const auto rooms = detail::room_indoor_series(store, catalog, *site);
      if (rooms.empty()) continue;
      const auto weather = provider.history(site->site_id);
      if (!weather) throw UsageError("no weather for site '" + site->site_id + "' in '" + cfg.weather.string() + "'");
      const Timestamp lo = local_midnight(from, site->tz_offset);
      const Timestamp hi = local_midnight(to, site->tz_offset);
      for (const auto& [room_id, full] : rooms) {
        const TimeSeries series = slice(full, lo, hi);
        const Classroom* room = site->find_room(room_id);

        const auto swings = weekend_daily_swings(room_id, series, site->tz_offset);
        for (const auto& d : swings.swings) {
          swings_csv += site->site_id + "," + room_id + "," + format_date(d.date) + "," + csv::format_fixed(d.min_c, 3) +
                        "," + csv::format_fixed(d.max_c, 3) + "," + csv::format_fixed(d.swing, 3) + "," +
                        csv::format_fixed(d.rise_hours, 3) + "\n";
        }
        if (auto flagged = flag_poor_insulation(swings.swings, cfg.swing_threshold_c,
                                                static_cast<std::size_t>(cfg.swing_min_days))) {
          flagged->site_id = site->site_id;
          insulation.push_back(std::move(*flagged));
        }

        try {
          auto report = solar_gain_correlation(room_id, series, *weather, room->orientation, site->tz_offset,
                                               cfg.orientation_gain);
          corr_csv += site->site_id + "," + room_id + "," + std::string(to_string(room->orientation)) + "," +
                      csv::format_fixed(report.r, 4) + "," + std::to_string(report.samples) + ",ok\n";
          report.room_id = site->site_id + "/" + room_id;
          site_of_room_key[report.room_id] = site->site_id;
          correlations.push_back(std::move(report));
        } catch (const AnalysisError& e) {
          corr_csv += site->site_id + "," + room_id + "," + std::string(to_string(room->orientation)) + ",,0,skipped\n";
          out << "perf: " << site->site_id << "/" << room_id << " correlation skipped: " << e.what() << "\n";
        }

        const auto raw_series = detail::event_series(raw, catalog, *site, room_id, cfg.quality);
        const TimeSeries school_days = filter(raw_series ? slice(*raw_series, lo, hi) : TimeSeries(),
                                              [&](const Sample& s) { return !is_weekend(local_date(s.at, site->tz_offset)); });
        const auto found = detect_occupant_events(school_days, cfg.events);
        if (!found.empty()) {
          AnomalyReport report{site->site_id, room_id, AnomalyKind::OccupantEvent, "event_count",
                               static_cast<double>(found.size()), {}};
          for (const auto& ev : found) {
            events_csv += site->site_id + "," + room_id + "," + format_timestamp(ev.start) + "," +
                          format_timestamp(ev.trough) + "," + format_timestamp(ev.recovered) + "," +
                          csv::format_fixed(ev.fall, 3) + "\n";
            report.evidence.push_back({local_date(ev.trough, site->tz_offset), ev.fall});
          }
          events.push_back(std::move(report));
        }
      }
    }

    std::vector<AnomalyReport> anomalies = std::move(insulation);
    for (auto& r : flag_unshaded_rooms(correlations, cfg.r_threshold)) {
      r.site_id = site_of_room_key[r.room_id];
      r.room_id = r.room_id.substr(r.site_id.size() + 1);
      anomalies.push_back(std::move(r));
    }
    for (auto& r : events) anomalies.push_back(std::move(r));

    detail::ensure_dir(cfg.out);
    write_file(cfg.out / "perf_swings.csv", swings_csv);
    write_file(cfg.out / "perf_correlation.csv", corr_csv);
    write_file(cfg.out / "perf_events.csv", events_csv);
    write_file(cfg.out / "anomalies.csv", anomaly_csv(anomalies));
    write_file(cfg.out / "anomalies.jsonl", anomaly_records(anomalies));
    std::map<std::string, int> by_kind;
    for (const auto& a : anomalies) ++by_kind[std::string(to_string(a.kind))];
    out << "perf: " << anomalies.size() << " anomaly records";
    for (const auto& [kind, n] : by_kind) out << ", " << kind << "=" << n;
    out << "\n";
    return kExitOk;
  });
}

}  // namespace bta
