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
// Pipeline stages over a run directory. Each stage reads only artifacts
// written by earlier stages plus the resolved configuration, and writes its
// own artifacts under a fixed layout:
//
//   runs/<x>/resolved_config.json
//   runs/<x>/recordings/<name>/{manifest.json, imu.csv, poses.csv, ...}
//   runs/<x>/calib/<name>.json
//   runs/<x>/bias/<name>.bias.jsonl, bias/summary.json
//   runs/<x>/models/model_{accel,gyro}.bin, curve_{accel,gyro}.csv,
//             train_report.json
//   runs/<x>/eval/report.json
//   runs/<x>/sweep/table.csv
//
// Every stage is deterministic for a fixed resolved configuration: running
// the same stage twice produces byte-identical artifacts.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "inertia/config.hpp"
#include "inertia/dataio.hpp"
#include "inertia/eval.hpp"
#include "inertia/log.hpp"
#include "inertia/train.hpp"

namespace inertia {

struct RunPaths {
  std::filesystem::path root;

  explicit RunPaths(std::filesystem::path r) : root(std::move(r)) {}

  std::filesystem::path resolved_config() const {
    return root / "resolved_config.json";
  }
  std::filesystem::path recordings_dir() const { return root / "recordings"; }
  std::filesystem::path recording_dir(const std::string& name) const {
    return recordings_dir() / name;
  }
  std::filesystem::path calib_dir() const { return root / "calib"; }
  std::filesystem::path calib_file(const std::string& name) const {
    return calib_dir() / (name + ".json");
  }
  std::filesystem::path bias_dir() const { return root / "bias"; }
  std::filesystem::path bias_file(const std::string& name) const {
    return bias_dir() / (name + ".bias.jsonl");
  }
  std::filesystem::path bias_summary() const {
    return bias_dir() / "summary.json";
  }
  std::filesystem::path models_dir() const { return root / "models"; }
  std::filesystem::path model_file(const std::string& target) const {
    return models_dir() / ("model_" + target + ".bin");
  }
  std::filesystem::path curve_file(const std::string& target) const {
    return models_dir() / ("curve_" + target + ".csv");
  }
  std::filesystem::path train_report() const {
    return models_dir() / "train_report.json";
  }
  std::filesystem::path eval_dir() const { return root / "eval"; }
  std::filesystem::path eval_report() const {
    return eval_dir() / "report.json";
  }
  std::filesystem::path sweep_dir() const { return root / "sweep"; }
  std::filesystem::path sweep_table() const {
    return sweep_dir() / "table.csv";
  }
};

namespace pipedetail {

using Json = nlohmann::json;

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
  if (!f) throw DataError("write failed: " + path.string());
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open: " + path.string());
  Json j;
  try {
    f >> j;
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
  return j;
}

inline Json reduction_json(const std::optional<double>& r) {
  return r ? Json(*r) : Json(nullptr);
}

}  // namespace pipedetail

inline void save_run_config(const RunConfig& cfg, const RunPaths& paths) {
  pipedetail::write_json(paths.resolved_config(), run_config_to_json(cfg));
}

inline RunConfig load_run_config(const RunPaths& paths) {
  if (!std::filesystem::exists(paths.resolved_config())) {
    throw ConfigError(paths.resolved_config().string() +
                      " not found; run the simulate stage first or pass "
                      "--config");
  }
  RunConfig cfg = run_config_from_json(pipedetail::read_json(paths.resolved_config()));
  resolve_run_config(cfg);
  return cfg;
}

// Stage 1: synthesize every configured recording.
struct SimulateOutcome {
  std::string name;
  int n_imu = 0;
  int n_poses = 0;
};

inline std::vector<SimulateOutcome> run_simulate(const RunConfig& cfg,
                                                 const RunPaths& paths) {
  save_run_config(cfg, paths);
  std::vector<SimulateOutcome> out;
  for (const auto& spec : cfg.recordings) {
    const Recording rec = simulate_recording(spec);
    write_recording(paths.recording_dir(spec.name), rec);
    out.push_back({spec.name, static_cast<int>(rec.imu.size()),
                   static_cast<int>(rec.poses.size())});
    log::info("simulated " + spec.name + ": " + std::to_string(rec.imu.size()) +
              " imu samples, " + std::to_string(rec.poses.size()) + " poses");
  }
  return out;
}

// Stage 2: estimate the helmet-to-IMU mount rotation per recording.
struct CalibrateOutcome {
  std::string name;
  Quat q_ih = Quat::Identity();  // v_I = R(q_ih) v_H
  int n_pairs = 0;
  double mean_pair_residual = 0.0;
  std::optional<double> error_deg;  // vs. synthetic truth when available
};

inline std::vector<CalibrateOutcome> run_calibrate(const RunConfig& cfg,
                                                   const RunPaths& paths) {
  std::vector<CalibrateOutcome> out;
  for (const auto& spec : cfg.recordings) {
    LoadedRecording lr = load_recording(paths.recording_dir(spec.name));
    clip_to_overlap(lr, cfg.min_overlap_s);
    const CalibrationResult res = calibrate_mount(lr.poses, lr.imu, cfg.calib);
    CalibrateOutcome oc;
    oc.name = spec.name;
    oc.q_ih = normalized_canonical(rot_to_quat(res.rotation));
    oc.n_pairs = res.n_pairs;
    oc.mean_pair_residual = res.mean_pair_residual;
    pipedetail::Json j;
    j["name"] = oc.name;
    j["q_ih"] = {oc.q_ih.w(), oc.q_ih.x(), oc.q_ih.y(), oc.q_ih.z()};
    j["n_pairs"] = oc.n_pairs;
    j["mean_pair_residual"] = oc.mean_pair_residual;
    j["singular_values"] = {res.singular_values(0), res.singular_values(1),
                            res.singular_values(2)};
    if (lr.manifest.true_mount_q_hi) {
      // The estimate maps helmet axes to IMU axes; truth stores the inverse.
      const Quat q_true = quat_conjugate(*lr.manifest.true_mount_q_hi);
      oc.error_deg = rad_to_deg(geodesic_angle(oc.q_ih, q_true));
      j["error_deg"] = *oc.error_deg;
    }
    pipedetail::write_json(paths.calib_file(spec.name), j);
    log::info("calibrated " + spec.name + ": " + std::to_string(oc.n_pairs) +
              " pairs, residual " + std::to_string(oc.mean_pair_residual));
    out.push_back(oc);
  }
  return out;
}

namespace pipedetail {

// The mount estimate feeding derive/eval; identity when calibration is off.
inline Mat3 load_calib_r(const RunConfig& cfg, const RunPaths& paths,
                         const std::string& name) {
  if (!cfg.calibrate) return Mat3::Identity();
  const auto file = paths.calib_file(name);
  if (!std::filesystem::exists(file)) {
    throw ConfigError(file.string() +
                      " not found; run the calibrate stage first or set "
                      "calibration.enabled = false");
  }
  const Json j = read_json(file);
  if (!j.contains("q_ih") || !j.at("q_ih").is_array() ||
      j.at("q_ih").size() != 4) {
    throw DataError(file.string() + ": missing or malformed q_ih");
  }
  const auto& q = j.at("q_ih");
  const Quat qq(q.at(0).get<double>(), q.at(1).get<double>(),
                q.at(2).get<double>(), q.at(3).get<double>());
  if (std::abs(qq.norm() - 1.0) > 1e-3) {
    throw DataError(file.string() + ": q_ih is not unit length");
  }
  return quat_to_rot(normalized_canonical(qq));
}

inline DeriveOptions derive_options_for(const RunConfig& cfg,
                                        const RunPaths& paths,
                                        const RecordingManifest& manifest) {
  DeriveOptions d = cfg.derive;
  d.calib_r = load_calib_r(cfg, paths, manifest.name);
  d.g_w = manifest.g_w;
  return d;
}

}  // namespace pipedetail

// Stage 3: invert pre-integration per segment to get ground-truth biases.
struct DeriveOutcome {
  std::string name;
  DeriveReport report;
};

inline std::vector<DeriveOutcome> run_derive_bias(const RunConfig& cfg,
                                                  const RunPaths& paths) {
  std::vector<DeriveOutcome> out;
  pipedetail::Json summary;
  for (const auto& spec : cfg.recordings) {
    LoadedRecording lr = load_recording(paths.recording_dir(spec.name));
    clip_to_overlap(lr, cfg.min_overlap_s);
    const DeriveOptions d = pipedetail::derive_options_for(cfg, paths, lr.manifest);
    const DeriveResult res = derive_bias_sequence(lr.imu, lr.poses, d);
    std::filesystem::create_directories(paths.bias_dir());
    write_bias_jsonl(paths.bias_file(spec.name), res.records);
    pipedetail::Json rj;
    rj["n_segments"] = res.report.n_segments;
    rj["n_valid"] = res.report.n_valid;
    rj["drop_reasons"] = res.report.drop_reasons;
    summary[spec.name] = rj;
    log::info("derived " + spec.name + ": " +
              std::to_string(res.report.n_valid) + "/" +
              std::to_string(res.report.n_segments) + " segments valid");
    out.push_back({spec.name, res.report});
  }
  pipedetail::write_json(paths.bias_summary(), summary);
  return out;
}

namespace pipedetail {

// Loads recordings plus their derived bias sequences for train/eval/sweep.
inline std::vector<DatasetEntry> load_dataset(const RunConfig& cfg,
                                              const RunPaths& paths) {
  std::vector<DatasetEntry> entries;
  for (const auto& spec : cfg.recordings) {
    LoadedRecording lr = load_recording(paths.recording_dir(spec.name));
    clip_to_overlap(lr, cfg.min_overlap_s);
    const auto bias_path = paths.bias_file(spec.name);
    if (!std::filesystem::exists(bias_path)) {
      throw ConfigError(bias_path.string() +
                        " not found; run the derive-bias stage first");
    }
    DatasetEntry e;
    e.manifest = lr.manifest;
    e.imu = std::move(lr.imu);
    e.poses = std::move(lr.poses);
    e.true_bias = std::move(lr.true_bias);
    e.bias = read_bias_jsonl(bias_path);
    entries.push_back(std::move(e));
  }
  return entries;
}

// Concatenates training sequences over a set of entries at one window size.
inline std::vector<SequenceSample> role_sequences(
    const std::vector<const DatasetEntry*>& role, int window_w,
    int history_len, double overlap) {
  std::vector<SequenceSample> seqs;
  for (const DatasetEntry* e : role) {
    const auto steps = build_steps(e->imu, e->bias, window_w);
    auto s = build_sequences(steps, history_len, overlap);
    seqs.insert(seqs.end(), std::make_move_iterator(s.begin()),
                std::make_move_iterator(s.end()));
  }
  return seqs;
}

struct TrainedPair {
  BiasModel accel;
  BiasModel gyro;
  FeatureCodec accel_codec;
  FeatureCodec gyro_codec;
  TrainResult accel_result;
  TrainResult gyro_result;
};

// Trains the accel/gyro pair for one model configuration. All randomness is
// derived from (run seed, tag) so concurrent sweep cells stay independent.
inline TrainedPair train_pair(const RunConfig& cfg, const ModelConfig& base,
                              const std::vector<SequenceSample>& train_seqs,
                              const std::vector<SequenceSample>& val_seqs,
                              int epochs, const std::string& tag,
                              const std::filesystem::path& curve_accel = {},
                              const std::filesystem::path& curve_gyro = {}) {
  if (train_seqs.empty()) {
    throw DataError("train: no usable training sequences; check the split "
                    "policy and the derived bias validity");
  }
  const Normalization nz = compute_normalization(train_seqs);

  ModelConfig acfg = base;
  acfg.target = "accel";
  ModelConfig gcfg = base;
  gcfg.target = "gyro";

  TrainConfig tc = cfg.train;
  tc.epochs = epochs;

  const FeatureCodec acodec(nz, "accel");
  const FeatureCodec gcodec(nz, "gyro");
  BiasModel amodel(acfg, splitmix64(cfg.seed ^ hash_tag("init:accel:" + tag)));
  BiasModel gmodel(gcfg, splitmix64(cfg.seed ^ hash_tag("init:gyro:" + tag)));

  tc.seed = splitmix64(cfg.seed ^ hash_tag("train:accel:" + tag));
  TrainResult ra = train_model(amodel, acodec, train_seqs, val_seqs, tc,
                               curve_accel);
  tc.seed = splitmix64(cfg.seed ^ hash_tag("train:gyro:" + tag));
  TrainResult rg = train_model(gmodel, gcodec, train_seqs, val_seqs, tc,
                               curve_gyro);
  return TrainedPair{std::move(amodel), std::move(gmodel), acodec, gcodec,
                     std::move(ra), std::move(rg)};
}

}  // namespace pipedetail

// Stage 4: train the accel and gyro bias predictors and save the artifacts.
struct TrainOutcome {
  std::string target;
  double best_val = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  bool diverged = false;
  bool early_stopped = false;
};

inline std::vector<TrainOutcome> run_train(const RunConfig& cfg,
                                           const RunPaths& paths) {
  const auto entries = pipedetail::load_dataset(cfg, paths);
  const SplitResult split = split_dataset(entries, cfg.split);
  const auto train_seqs = pipedetail::role_sequences(
      split.train, cfg.model.window_w, cfg.model.history_len,
      cfg.sequence_overlap);
  const auto val_seqs = pipedetail::role_sequences(
      split.val, cfg.model.window_w, cfg.model.history_len,
      cfg.sequence_overlap);
  log::info("training on " + std::to_string(train_seqs.size()) +
            " sequences, validating on " + std::to_string(val_seqs.size()));

  std::filesystem::create_directories(paths.models_dir());
  auto pair = pipedetail::train_pair(cfg, cfg.model, train_seqs, val_seqs,
                                     cfg.train.epochs, "main",
                                     paths.curve_file("accel"),
                                     paths.curve_file("gyro"));
  save_model(paths.model_file("accel"), pair.accel, pair.accel_codec);
  save_model(paths.model_file("gyro"), pair.gyro, pair.gyro_codec);

  auto outcome = [](const std::string& target, const TrainResult& r) {
    TrainOutcome o;
    o.target = target;
    o.best_val = r.best_val;
    o.best_epoch = r.best_epoch;
    o.epochs_run = static_cast<int>(r.curve.size());
    o.diverged = r.diverged;
    o.early_stopped = r.early_stopped;
    return o;
  };
  std::vector<TrainOutcome> out;
  out.push_back(outcome("accel", pair.accel_result));
  out.push_back(outcome("gyro", pair.gyro_result));

  pipedetail::Json j;
  j["split"] = cfg.split;
  j["n_train_sequences"] = train_seqs.size();
  j["n_val_sequences"] = val_seqs.size();
  for (const auto& o : out) {
    pipedetail::Json t;
    t["best_val"] = o.best_val;
    t["best_epoch"] = o.best_epoch;
    t["epochs_run"] = o.epochs_run;
    t["diverged"] = o.diverged;
    t["early_stopped"] = o.early_stopped;
    j["targets"][o.target] = t;
  }
  pipedetail::write_json(paths.train_report(), j);
  for (const auto& o : out) {
    log::info("trained " + o.target + ": best val mse " +
              std::to_string(o.best_val) + " at epoch " +
              std::to_string(o.best_epoch));
  }
  return out;
}

// Stage 5: measure the dead-reckoning improvement on the held-out split.
struct EvalRecordingOutcome {
  std::string name;
  int n_segments = 0;
  double mean_before = 0.0;
  double model_after = 0.0;
  std::optional<double> model_reduction;
  double gt_after = 0.0;
  std::optional<double> gt_reduction;
};

struct EvalOutcome {
  std::vector<EvalRecordingOutcome> recordings;
  EvalRecordingOutcome aggregate;  // name = "aggregate", pooled means
};

inline EvalOutcome run_eval(const RunConfig& cfg, const RunPaths& paths) {
  for (const auto& target : {"accel", "gyro"}) {
    if (!std::filesystem::exists(paths.model_file(target))) {
      throw ConfigError(paths.model_file(target).string() +
                        " not found; run the train stage first");
    }
  }
  LoadedModel accel = load_model(paths.model_file("accel"));
  LoadedModel gyro = load_model(paths.model_file("gyro"));
  const int window_w = accel.model.config().window_w;
  const int history_len = accel.model.config().history_len;

  const auto entries = pipedetail::load_dataset(cfg, paths);
  const SplitResult split = split_dataset(entries, cfg.split);

  EvalOutcome out;
  double sum_before = 0.0, sum_model = 0.0, sum_gt = 0.0;
  int n_total = 0;
  pipedetail::Json jrecs = pipedetail::Json::array();
  for (const DatasetEntry* e : split.test) {
    const auto steps = build_steps(e->imu, e->bias, window_w);
    const auto preds = predict_bias_sequence(accel.model, accel.codec,
                                             gyro.model, gyro.codec, steps);
    EvalOptions opts;
    opts.derive = pipedetail::derive_options_for(cfg, paths, e->manifest);
    opts.min_index =
        cfg.eval_min_index >= 0 ? cfg.eval_min_index : history_len - 1;

    const EvalResult model_res = evaluate_bias_sequence(
        e->imu, e->poses, e->bias, model_bias_provider(preds), opts);
    // Ground-truth reference on exactly the same segment set: valid records
    // that also have a model prediction.
    const auto gt_provider = [&](int k) -> std::optional<Vec6> {
      if (k < 0 || k >= static_cast<int>(preds.size()) ||
          !preds[static_cast<std::size_t>(k)]) {
        return std::nullopt;
      }
      return record_bias_provider(e->bias)(k);
    };
    const EvalResult gt_res = evaluate_bias_sequence(e->imu, e->poses, e->bias,
                                                     gt_provider, opts);

    EvalRecordingOutcome r;
    r.name = e->manifest.name;
    r.n_segments = model_res.n_segments;
    r.mean_before = model_res.mean_before;
    r.model_after = model_res.mean_after;
    r.model_reduction = model_res.reduction;
    r.gt_after = gt_res.mean_after;
    r.gt_reduction = gt_res.reduction;
    out.recordings.push_back(r);

    sum_before += model_res.mean_before * model_res.n_segments;
    sum_model += model_res.mean_after * model_res.n_segments;
    sum_gt += gt_res.mean_after * gt_res.n_segments;
    n_total += model_res.n_segments;

    pipedetail::Json jr;
    jr["name"] = r.name;
    jr["n_segments"] = r.n_segments;
    jr["mean_before"] = r.mean_before;
    jr["model"] = {{"mean_after", r.model_after},
                   {"reduction", pipedetail::reduction_json(r.model_reduction)}};
    jr["ground_truth"] = {{"mean_after", r.gt_after},
                          {"reduction", pipedetail::reduction_json(r.gt_reduction)}};
    jrecs.push_back(jr);
    log::info("evaluated " + r.name + ": " + std::to_string(r.n_segments) +
              " segments, model reduction " +
              (r.model_reduction ? std::to_string(*r.model_reduction)
                                 : std::string("undefined")));
  }
  if (n_total == 0) {
    throw DataError("eval: no segments in the evaluation split");
  }
  out.aggregate.name = "aggregate";
  out.aggregate.n_segments = n_total;
  out.aggregate.mean_before = sum_before / n_total;
  out.aggregate.model_after = sum_model / n_total;
  out.aggregate.model_reduction =
      error_reduction(out.aggregate.mean_before, out.aggregate.model_after);
  out.aggregate.gt_after = sum_gt / n_total;
  out.aggregate.gt_reduction =
      error_reduction(out.aggregate.mean_before, out.aggregate.gt_after);

  pipedetail::Json j;
  j["split"] = cfg.split;
  j["min_index"] =
      cfg.eval_min_index >= 0 ? cfg.eval_min_index : history_len - 1;
  j["recordings"] = jrecs;
  j["aggregate"] = {
      {"n_segments", out.aggregate.n_segments},
      {"mean_before", out.aggregate.mean_before},
      {"model", {{"mean_after", out.aggregate.model_after},
                 {"reduction",
                  pipedetail::reduction_json(out.aggregate.model_reduction)}}},
      {"ground_truth",
       {{"mean_after", out.aggregate.gt_after},
        {"reduction", pipedetail::reduction_json(out.aggregate.gt_reduction)}}}};
  pipedetail::write_json(paths.eval_report(), j);
  return out;
}

// Stage 6: window-size x variant grid, reported as a CSV table.
struct SweepCell {
  std::string variant;
  int window_w = 0;
  double val_accel = 0.0;
  double val_gyro = 0.0;
  double val_total = 0.0;
  int best_epoch_accel = -1;
  int best_epoch_gyro = -1;
  bool diverged = false;
};

inline std::vector<SweepCell> run_sweep(const RunConfig& cfg,
                                        const RunPaths& paths, int jobs = 1) {
  const auto entries = pipedetail::load_dataset(cfg, paths);
  const SplitResult split = split_dataset(entries, cfg.split);
  const int epochs = cfg.sweep.epochs > 0 ? cfg.sweep.epochs : cfg.train.epochs;

  std::vector<SweepCell> cells;
  for (const auto& variant : cfg.sweep.variants) {
    for (int w : cfg.sweep.windows) {
      SweepCell c;
      c.variant = variant;
      c.window_w = w;
      cells.push_back(c);
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string fail_message;
  std::mutex fail_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed.load()) return;
      SweepCell& c = cells[i];
      try {
        ModelConfig base = cfg.model;
        base.variant = c.variant;
        base.window_w = c.window_w;
        base.target = "accel";
        base.validate();
        const auto train_seqs = pipedetail::role_sequences(
            split.train, base.window_w, base.history_len, cfg.sequence_overlap);
        const auto val_seqs = pipedetail::role_sequences(
            split.val, base.window_w, base.history_len, cfg.sequence_overlap);
        const std::string tag =
            "sweep:" + c.variant + ":w" + std::to_string(c.window_w);
        auto pair = pipedetail::train_pair(cfg, base, train_seqs, val_seqs,
                                           epochs, tag);
        c.val_accel = pair.accel_result.best_val;
        c.val_gyro = pair.gyro_result.best_val;
        c.val_total = c.val_accel + c.val_gyro;
        c.best_epoch_accel = pair.accel_result.best_epoch;
        c.best_epoch_gyro = pair.gyro_result.best_epoch;
        c.diverged = pair.accel_result.diverged || pair.gyro_result.diverged;
        log::info("sweep " + c.variant + " w=" + std::to_string(c.window_w) +
                  ": val " + std::to_string(c.val_total));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (!failed.exchange(true)) {
          fail_message = e.what();
        }
        return;
      }
    }
  };

  const int n_threads = std::max(
      1, std::min(jobs, static_cast<int>(cells.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw DataError("sweep: " + fail_message);

  std::filesystem::create_directories(paths.sweep_dir());
  std::ofstream f(paths.sweep_table(), std::ios::binary);
  if (!f) throw ConfigError("cannot open " + paths.sweep_table().string());
  f << "variant,window_w,val_accel,val_gyro,val_total,best_epoch_accel,"
       "best_epoch_gyro,diverged\n";
  for (const auto& c : cells) {
    f << c.variant << ',' << c.window_w << ',' << format_double(c.val_accel)
      << ',' << format_double(c.val_gyro) << ',' << format_double(c.val_total)
      << ',' << c.best_epoch_accel << ',' << c.best_epoch_gyro << ','
      << (c.diverged ? 1 : 0) << "\n";
  }
  if (!f) throw DataError("write failed: " + paths.sweep_table().string());
  return cells;
}

}  // namespace inertia
