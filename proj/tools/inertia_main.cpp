// Copyright 2026 InertiaKit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command line front end. Stages write into a run directory; later stages
// read the resolved configuration the simulate stage stored there, so a
// whole run is reproducible from the directory alone:
//
//   inertia simulate    --out runs/demo [--config cfg.json] [--seed N]
//   inertia calibrate   --out runs/demo
//   inertia derive-bias --out runs/demo
//   inertia train       --out runs/demo [--preset desk|full]
//   inertia eval        --out runs/demo
//   inertia sweep       --out runs/demo [--jobs N]
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
// error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "inertia/config.hpp"
#include "inertia/pipeline.hpp"

namespace {

using inertia::RunConfig;
using inertia::RunPaths;

inertia::cfgdetail::Json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw inertia::ConfigError("cannot open config file: " + path);
  inertia::cfgdetail::Json j;
  try {
    f >> j;
  } catch (const inertia::cfgdetail::Json::exception& e) {
    throw inertia::ConfigError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

struct CommonArgs {
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string preset;
};

// The simulate stage may fall back to the built-in demo configuration; the
// later stages require the resolved config the run directory already holds.
RunConfig acquire_config(const CommonArgs& args, const RunPaths& paths,
                         bool allow_builtin_default) {
  RunConfig cfg;
  if (!args.config.empty()) {
    cfg = inertia::run_config_from_json(read_json_file(args.config));
  } else if (std::filesystem::exists(paths.resolved_config())) {
    cfg = inertia::run_config_from_json(
        inertia::pipedetail::read_json(paths.resolved_config()));
  } else if (allow_builtin_default) {
    cfg = inertia::default_run_config();
  } else {
    throw inertia::ConfigError(
        paths.resolved_config().string() +
        " not found; run the simulate stage first or pass --config");
  }
  if (args.seed) cfg.seed = *args.seed;
  if (!args.preset.empty()) {
    const std::string variant = cfg.model.variant;
    cfg.model_preset = args.preset;
    cfg.model = args.preset == "desk"
                    ? inertia::ModelConfig::desk(variant, "accel")
                    : inertia::ModelConfig::full(variant, "accel");
  }
  inertia::resolve_run_config(cfg);
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* sub, CommonArgs& args, bool with_preset) {
  sub->add_option("--out", args.out, "run directory for artifacts")
      ->required();
  sub->add_option("--config", args.config,
                  "JSON configuration file (default: resolved_config.json "
                  "in the run directory)");
  sub->add_option("--seed", args.seed, "override the run seed");
  if (with_preset) {
    sub->add_option("--preset", args.preset,
                    "model size preset, overrides the config")
        ->check(CLI::IsMember({"desk", "full"}));
  }
}

std::string fmt_reduction(const std::optional<double>& r) {
  if (!r) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * *r);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "inertia: derive per-segment IMU biases from motion-capture poses,\n"
      "learn to predict them, and measure the dead-reckoning improvement"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "inertia-kit 0.1.0");

  CommonArgs args;
  int jobs = 1;

  auto* simulate = app.add_subcommand(
      "simulate", "synthesize the configured recordings");
  add_common(simulate, args, false);
  auto* calibrate = app.add_subcommand(
      "calibrate", "estimate the helmet-to-IMU mount rotation");
  add_common(calibrate, args, false);
  auto* derive = app.add_subcommand(
      "derive-bias", "invert pre-integration to get per-segment biases");
  add_common(derive, args, false);
  auto* train = app.add_subcommand(
      "train", "train the accel and gyro bias predictors");
  add_common(train, args, true);
  auto* eval = app.add_subcommand(
      "eval", "measure the dead-reckoning improvement on the held-out split");
  add_common(eval, args, false);
  auto* sweep = app.add_subcommand(
      "sweep", "train a window-size x variant grid and tabulate it");
  add_common(sweep, args, true);
  sweep->add_option("--jobs", jobs, "concurrent sweep cells")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message to stderr
    return 2;
  }

  try {
    const RunPaths paths{std::filesystem::path(args.out)};
    if (simulate->parsed()) {
      const RunConfig cfg = acquire_config(args, paths, true);
      const auto outcomes = inertia::run_simulate(cfg, paths);
      std::cout << "wrote " << outcomes.size() << " recordings under "
                << paths.recordings_dir().string() << "\n";
    } else if (calibrate->parsed()) {
      const RunConfig cfg = acquire_config(args, paths, false);
      if (!cfg.calibrate) {
        std::cout << "calibration disabled in the configuration; "
                     "derive-bias will use the identity mount\n";
        return 0;
      }
      for (const auto& oc : inertia::run_calibrate(cfg, paths)) {
        std::cout << oc.name << ": " << oc.n_pairs << " pairs";
        if (oc.error_deg) std::cout << ", error " << *oc.error_deg << " deg";
        std::cout << "\n";
      }
    } else if (derive->parsed()) {
      const RunConfig cfg = acquire_config(args, paths, false);
      for (const auto& oc : inertia::run_derive_bias(cfg, paths)) {
        std::cout << oc.name << ": " << oc.report.n_valid << "/"
                  << oc.report.n_segments << " segments valid\n";
      }
    } else if (train->parsed()) {
      const RunConfig cfg = acquire_config(args, paths, false);
      for (const auto& oc : inertia::run_train(cfg, paths)) {
        std::cout << oc.target << ": best val mse " << oc.best_val
                  << " at epoch " << oc.best_epoch
                  << (oc.diverged ? " (diverged, rolled back)" : "")
                  << (oc.early_stopped ? " (early stop)" : "") << "\n";
      }
    } else if (eval->parsed()) {
      const RunConfig cfg = acquire_config(args, paths, false);
      const auto res = inertia::run_eval(cfg, paths);
      for (const auto& r : res.recordings) {
        std::cout << r.name << ": " << r.n_segments
                  << " segments, model reduction "
                  << fmt_reduction(r.model_reduction) << ", ground truth "
                  << fmt_reduction(r.gt_reduction) << "\n";
      }
      std::cout << "aggregate: " << res.aggregate.n_segments
                << " segments, model reduction "
                << fmt_reduction(res.aggregate.model_reduction)
                << ", ground truth "
                << fmt_reduction(res.aggregate.gt_reduction) << "\n";
    } else if (sweep->parsed()) {
      const RunConfig cfg = acquire_config(args, paths, false);
      const auto cells = inertia::run_sweep(cfg, paths, jobs);
      std::cout << "variant,window_w,val_total\n";
      for (const auto& c : cells) {
        std::cout << c.variant << ',' << c.window_w << ','
                  << c.val_total << "\n";
      }
    }
  } catch (const inertia::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return inertia::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
