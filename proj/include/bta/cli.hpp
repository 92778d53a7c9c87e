#pragma once

// Argument parsing for the `bta` executable.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bta/commands.hpp"

namespace bta {

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                   const EnvLookup& env = process_env) {
  CLI::App app{"Building telemetry analytics: data quality, thermal comfort and thermal performance", "bta"};
  app.require_subcommand(1);

  std::string config, out_dir, from, to;
  int acceptability = 0;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON run configuration");
    sub->add_option("--out", out_dir, "report directory");
  };
  const auto add_period = [&](CLI::App* sub) {
    sub->add_option("--from", from, "first day of the analysis period (YYYY-MM-DD)");
    sub->add_option("--to", to, "day after the analysis period (YYYY-MM-DD)");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic deployment from a scenario spec");
  synth->add_option("--config", config, "scenario spec (JSON)")->required();
  synth->add_option("--out", out_dir, "output directory")->required();
  auto* ingest = app.add_subcommand("ingest", "load measurement files into the raw store");
  add_common(ingest);
  auto* quality = app.add_subcommand("quality", "availability, outlier repair and quality tables");
  add_common(quality);
  add_period(quality);
  auto* comfort = app.add_subcommand("comfort", "adaptive thermal comfort scores");
  add_common(comfort);
  add_period(comfort);
  comfort->add_option("--acceptability", acceptability, "80 or 90");
  auto* perf = app.add_subcommand("perf", "weekend thermal performance and occupant events");
  add_common(perf);
  add_period(perf);

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (synth->parsed()) return cmd_synth(config, out_dir, out, err);

  RunConfig cfg;
  const int loaded = detail::guarded(err, [&] {
    ConfigOverrides overrides;
    const auto date = [](const std::string& text, const char* flag) {
      try {
        return parse_date(text);
      } catch (const ParseError& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
      }
    };
    if (!from.empty()) overrides.from = date(from, "--from");
    if (!to.empty()) overrides.to = date(to, "--to");
    if (!out_dir.empty()) overrides.out = out_dir;
    if (acceptability != 0) overrides.acceptability = acceptability;
    cfg = load_run_config(config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config), env,
                          overrides);
    return kExitOk;
  });
  if (loaded != kExitOk) return loaded;

  if (ingest->parsed()) return cmd_ingest(cfg, out, err);
  if (quality->parsed()) return cmd_quality(cfg, out, err);
  if (comfort->parsed()) return cmd_comfort(cfg, out, err);
  return cmd_perf(cfg, out, err);
}

}  // namespace bta
