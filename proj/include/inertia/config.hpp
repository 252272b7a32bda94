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
// Run configuration: one JSON document that pins every knob of a pipeline
// run. Parsing is strict (unknown keys are configuration errors) so a typo
// never silently falls back to a default, and the resolved form (presets
// expanded, derived seeds filled in) round-trips byte-for-byte, which is
// what makes re-running a stage from resolved_config.json reproducible.

#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "inertia/calib.hpp"
#include "inertia/errors.hpp"
#include "inertia/gtbias.hpp"
#include "inertia/models.hpp"
#include "inertia/rng.hpp"
#include "inertia/simkit.hpp"
#include "inertia/train.hpp"

namespace inertia {

namespace cfgdetail {

using Json = nlohmann::json;

inline void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) {
    throw ConfigError(path + ": expected a JSON object");
  }
}

// Strictness gate: every present key must be in the allowed list.
inline void check_keys(const Json& j, const std::string& path,
                       std::initializer_list<std::string_view> allowed) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known =
        std::find(allowed.begin(), allowed.end(), it.key()) != allowed.end();
    if (!known) {
      throw ConfigError(path + ": unknown key '" + it.key() + "'");
    }
  }
}

inline double get_num(const Json& j, const std::string& path,
                      const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline int get_int(const Json& j, const std::string& path,
                   const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(path + "." + key + ": expected an integer");
  }
  return v.get<int>();
}

inline bool get_bool(const Json& j, const std::string& path,
                     const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a bool");
  return v.get<bool>();
}

inline std::string get_str(const Json& j, const std::string& path,
                           const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline Vec3 get_vec3(const Json& j, const std::string& path,
                     const std::string& key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 3 || !v.at(0).is_number() ||
      !v.at(1).is_number() || !v.at(2).is_number()) {
    throw ConfigError(path + "." + key + ": expected an array of 3 numbers");
  }
  return Vec3(v.at(0).get<double>(), v.at(1).get<double>(),
              v.at(2).get<double>());
}

inline Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace cfgdetail

// Sub-grid swept by the "sweep" stage. epochs == 0 inherits train.epochs.
struct SweepConfig {
  std::vector<int> windows = {6, 10, 20, 32};
  std::vector<std::string> variants = {"recurrent", "attention"};
  int epochs = 0;

  void validate() const {
    if (windows.empty() || variants.empty()) {
      throw ConfigError("sweep: windows and variants must be non-empty");
    }
    for (int w : windows) {
      if (w < 1) throw ConfigError("sweep: window values must be >= 1");
    }
    for (const auto& v : variants) {
      if (v != "recurrent" && v != "attention") {
        throw ConfigError("sweep: unknown variant '" + v + "'");
      }
    }
    if (epochs < 0) throw ConfigError("sweep: epochs must be >= 0");
  }
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<RecordingSpec> recordings;

  bool calibrate = true;
  PairBuildOptions calib;

  DeriveOptions derive;  // calib_r is filled per recording at run time

  std::string model_preset = "desk";  // "desk" | "full" | "custom"
  ModelConfig model;                  // resolved; target is set per trainee

  TrainConfig train;
  double sequence_overlap = 0.5;      // window overlap when slicing sequences
  std::string split = "holdout:B";

  int eval_min_index = -1;            // -1: history_len - 1
  double min_overlap_s = 10.0;        // required imu/pose stream overlap

  SweepConfig sweep;

  void validate() const {
    if (recordings.empty()) {
      throw ConfigError("config: at least one recording is required");
    }
    for (const auto& r : recordings) {
      if (r.name.empty()) throw ConfigError("recordings: name must be non-empty");
      if (!(r.duration_s > 0.0)) {
        throw ConfigError("recordings." + r.name + ": duration_s must be > 0");
      }
      if (!(r.imu_rate_hz > 0.0) || !(r.pose_rate_hz > 0.0)) {
        throw ConfigError("recordings." + r.name + ": rates must be > 0");
      }
      if (r.bias.mode != "constant" && r.bias.mode != "random_walk") {
        throw ConfigError("recordings." + r.name + ": unknown bias mode '" +
                          r.bias.mode + "'");
      }
      const int dup = static_cast<int>(std::count_if(
          recordings.begin(), recordings.end(),
          [&](const RecordingSpec& o) { return o.name == r.name; }));
      if (dup != 1) {
        throw ConfigError("recordings: duplicate name '" + r.name + "'");
      }
    }
    if (model_preset != "desk" && model_preset != "full" &&
        model_preset != "custom") {
      throw ConfigError("model.preset: expected 'desk', 'full' or 'custom'");
    }
    model.validate();
    train.validate();
    if (!(sequence_overlap >= 0.0) || sequence_overlap >= 1.0) {
      throw ConfigError("train.overlap: expected a value in [0, 1)");
    }
    if (!(min_overlap_s > 0.0)) {
      throw ConfigError("config: min_overlap_s must be > 0");
    }
    sweep.validate();
    if (!(derive.segment_s > 0.0)) {
      throw ConfigError("derive.segment_s must be > 0");
    }
  }
};

namespace cfgdetail {

inline MotionProfile profile_preset(const std::string& name,
                                    const std::string& path) {
  if (name == "walk") return walk_profile();
  if (name == "run") return run_profile();
  if (name == "stairs") return stairs_profile();
  throw ConfigError(path + ": unknown profile preset '" + name + "'");
}

inline MotionProfile parse_profile(const Json& j, const std::string& path,
                                   const std::string& activity) {
  // Default: the preset matching the activity tag, plain walk otherwise.
  MotionProfile base = (activity == "run" || activity == "stairs")
                           ? profile_preset(activity, path)
                           : walk_profile();
  if (j.is_string()) return profile_preset(j.get<std::string>(), path);
  check_keys(j, path,
             {"preset", "speed", "stride_hz", "bob_amp", "yaw_amp",
              "pitch_amp", "roll_amp", "stair_rise", "height"});
  if (j.contains("preset")) {
    base = profile_preset(get_str(j, path, "preset", ""), path);
  }
  base.speed = get_num(j, path, "speed", base.speed);
  base.stride_hz = get_num(j, path, "stride_hz", base.stride_hz);
  base.bob_amp = get_num(j, path, "bob_amp", base.bob_amp);
  base.yaw_amp = get_num(j, path, "yaw_amp", base.yaw_amp);
  base.pitch_amp = get_num(j, path, "pitch_amp", base.pitch_amp);
  base.roll_amp = get_num(j, path, "roll_amp", base.roll_amp);
  base.stair_rise = get_num(j, path, "stair_rise", base.stair_rise);
  base.height = get_num(j, path, "height", base.height);
  return base;
}

inline Json profile_json(const MotionProfile& p) {
  Json j;
  j["speed"] = p.speed;
  j["stride_hz"] = p.stride_hz;
  j["bob_amp"] = p.bob_amp;
  j["yaw_amp"] = p.yaw_amp;
  j["pitch_amp"] = p.pitch_amp;
  j["roll_amp"] = p.roll_amp;
  j["stair_rise"] = p.stair_rise;
  j["height"] = p.height;
  return j;
}

inline RecordingSpec parse_recording(const Json& j, const std::string& path) {
  check_keys(j, path,
             {"name", "participant", "activity", "imu_source", "duration_s",
              "imu_rate_hz", "pose_rate_hz", "profile", "bias", "noise",
              "mocap_sigma_p", "mocap_sigma_q", "mount_rpy_deg", "mount_q_hi",
              "g_w", "seed"});
  RecordingSpec s;
  s.name = get_str(j, path, "name", "");
  if (s.name.empty()) throw ConfigError(path + ": name is required");
  s.participant = get_str(j, path, "participant", s.participant);
  s.activity = get_str(j, path, "activity", s.activity);
  s.imu_source = get_str(j, path, "imu_source", s.imu_source);
  s.duration_s = get_num(j, path, "duration_s", s.duration_s);
  s.imu_rate_hz = get_num(j, path, "imu_rate_hz", s.imu_rate_hz);
  s.pose_rate_hz = get_num(j, path, "pose_rate_hz", s.pose_rate_hz);
  if (j.contains("profile")) {
    s.profile = parse_profile(j.at("profile"), path + ".profile", s.activity);
  } else {
    s.profile = parse_profile(Json::object(), path + ".profile", s.activity);
  }
  if (j.contains("bias")) {
    const auto& b = j.at("bias");
    const std::string bp = path + ".bias";
    check_keys(b, bp, {"mode", "b_a0", "b_w0", "walk_sigma_ba", "walk_sigma_bw"});
    s.bias.mode = get_str(b, bp, "mode", s.bias.mode);
    s.bias.b_a0 = get_vec3(b, bp, "b_a0", s.bias.b_a0);
    s.bias.b_w0 = get_vec3(b, bp, "b_w0", s.bias.b_w0);
    s.bias.walk_sigma_ba = get_num(b, bp, "walk_sigma_ba", s.bias.walk_sigma_ba);
    s.bias.walk_sigma_bw = get_num(b, bp, "walk_sigma_bw", s.bias.walk_sigma_bw);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    const std::string np = path + ".noise";
    check_keys(n, np, {"sigma_a", "sigma_w"});
    s.noise.sigma_a = get_num(n, np, "sigma_a", s.noise.sigma_a);
    s.noise.sigma_w = get_num(n, np, "sigma_w", s.noise.sigma_w);
  }
  s.mocap_sigma_p = get_num(j, path, "mocap_sigma_p", s.mocap_sigma_p);
  s.mocap_sigma_q = get_num(j, path, "mocap_sigma_q", s.mocap_sigma_q);
  if (j.contains("mount_rpy_deg") && j.contains("mount_q_hi")) {
    throw ConfigError(path + ": give mount_rpy_deg or mount_q_hi, not both");
  }
  if (j.contains("mount_rpy_deg")) {
    const Vec3 rpy = get_vec3(j, path, "mount_rpy_deg", Vec3::Zero());
    s.mount_q_hi = normalized_canonical(
        Quat(Eigen::AngleAxisd(deg_to_rad(rpy.z()), Vec3::UnitZ()) *
             Eigen::AngleAxisd(deg_to_rad(rpy.y()), Vec3::UnitY()) *
             Eigen::AngleAxisd(deg_to_rad(rpy.x()), Vec3::UnitX())));
  }
  if (j.contains("mount_q_hi")) {
    const auto& q = j.at("mount_q_hi");
    if (!q.is_array() || q.size() != 4) {
      throw ConfigError(path + ".mount_q_hi: expected [w, x, y, z]");
    }
    const Quat raw(q.at(0).get<double>(), q.at(1).get<double>(),
                   q.at(2).get<double>(), q.at(3).get<double>());
    if (std::abs(raw.norm() - 1.0) > 1e-3) {
      throw ConfigError(path + ".mount_q_hi: quaternion is not unit length");
    }
    s.mount_q_hi = normalized_canonical(raw);
  }
  s.g_w = get_vec3(j, path, "g_w", s.g_w);
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      throw ConfigError(path + ".seed: expected a non-negative integer");
    }
    s.seed = v.get<std::uint64_t>();
  } else {
    s.seed = 0;  // resolved later from the run seed and the recording name
  }
  return s;
}

inline Json recording_json(const RecordingSpec& s) {
  Json j;
  j["name"] = s.name;
  j["participant"] = s.participant;
  j["activity"] = s.activity;
  j["imu_source"] = s.imu_source;
  j["duration_s"] = s.duration_s;
  j["imu_rate_hz"] = s.imu_rate_hz;
  j["pose_rate_hz"] = s.pose_rate_hz;
  j["profile"] = profile_json(s.profile);
  j["bias"] = {{"mode", s.bias.mode},
               {"b_a0", vec3_json(s.bias.b_a0)},
               {"b_w0", vec3_json(s.bias.b_w0)},
               {"walk_sigma_ba", s.bias.walk_sigma_ba},
               {"walk_sigma_bw", s.bias.walk_sigma_bw}};
  j["noise"] = {{"sigma_a", s.noise.sigma_a}, {"sigma_w", s.noise.sigma_w}};
  j["mocap_sigma_p"] = s.mocap_sigma_p;
  j["mocap_sigma_q"] = s.mocap_sigma_q;
  j["mount_q_hi"] = Json::array(
      {s.mount_q_hi.w(), s.mount_q_hi.x(), s.mount_q_hi.y(), s.mount_q_hi.z()});
  j["g_w"] = vec3_json(s.g_w);
  j["seed"] = s.seed;
  return j;
}

}  // namespace cfgdetail

// Fills derived fields: per-recording seeds (0 means "derive from the run
// seed and the recording name") and preset expansion already happened during
// parsing; this is the one place the seed substitution lives.
inline void resolve_run_config(RunConfig& cfg) {
  for (auto& r : cfg.recordings) {
    if (r.seed == 0) {
      r.seed = splitmix64(cfg.seed ^ hash_tag("recording:" + r.name));
      if (r.seed == 0) r.seed = 1;  // keep 0 reserved as the "auto" marker
    }
  }
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using namespace cfgdetail;
  check_keys(j, "config",
             {"seed", "recordings", "calibration", "derive", "model", "train",
              "eval", "sweep"});
  RunConfig cfg;
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      throw ConfigError("config.seed: expected a non-negative integer");
    }
    cfg.seed = v.get<std::uint64_t>();
  }
  if (!j.contains("recordings") || !j.at("recordings").is_array()) {
    throw ConfigError("config.recordings: expected an array");
  }
  int idx = 0;
  for (const auto& rj : j.at("recordings")) {
    cfg.recordings.push_back(
        parse_recording(rj, "recordings[" + std::to_string(idx) + "]"));
    ++idx;
  }
  if (j.contains("calibration")) {
    const auto& c = j.at("calibration");
    const std::string cp = "calibration";
    check_keys(c, cp,
               {"enabled", "window_s", "stride_s", "min_angle_rad",
                "min_axis_separation_rad", "min_pairs"});
    cfg.calibrate = get_bool(c, cp, "enabled", cfg.calibrate);
    cfg.calib.window_s = get_num(c, cp, "window_s", cfg.calib.window_s);
    cfg.calib.stride_s = get_num(c, cp, "stride_s", cfg.calib.stride_s);
    cfg.calib.min_angle_rad =
        get_num(c, cp, "min_angle_rad", cfg.calib.min_angle_rad);
    cfg.calib.min_axis_separation_rad = get_num(
        c, cp, "min_axis_separation_rad", cfg.calib.min_axis_separation_rad);
    cfg.calib.min_pairs = get_int(c, cp, "min_pairs", cfg.calib.min_pairs);
  }
  if (j.contains("derive")) {
    const auto& d = j.at("derive");
    const std::string dp = "derive";
    check_keys(d, dp,
               {"segment_s", "quadrature", "chain_prior", "min_valid_fraction",
                "min_overlap_s"});
    cfg.derive.segment_s = get_num(d, dp, "segment_s", cfg.derive.segment_s);
    const std::string quad =
        get_str(d, dp, "quadrature",
                cfg.derive.quadrature == Quadrature::Midpoint ? "midpoint"
                                                              : "left");
    if (quad == "midpoint") {
      cfg.derive.quadrature = Quadrature::Midpoint;
    } else if (quad == "left") {
      cfg.derive.quadrature = Quadrature::LeftSample;
    } else {
      throw ConfigError("derive.quadrature: expected 'midpoint' or 'left'");
    }
    cfg.derive.chain_prior = get_bool(d, dp, "chain_prior", cfg.derive.chain_prior);
    cfg.derive.min_valid_fraction =
        get_num(d, dp, "min_valid_fraction", cfg.derive.min_valid_fraction);
    cfg.min_overlap_s = get_num(d, dp, "min_overlap_s", cfg.min_overlap_s);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    const std::string mp = "model";
    check_keys(m, mp,
               {"preset", "variant", "window_w", "history_len", "layers",
                "hidden_dim", "embed_dim", "heads", "ffn_mult"});
    cfg.model_preset = get_str(m, mp, "preset", cfg.model_preset);
    const std::string variant = get_str(m, mp, "variant", "recurrent");
    if (cfg.model_preset == "desk") {
      cfg.model = ModelConfig::desk(variant, "accel");
    } else if (cfg.model_preset == "full") {
      cfg.model = ModelConfig::full(variant, "accel");
    } else if (cfg.model_preset == "custom") {
      cfg.model = ModelConfig{};
      cfg.model.variant = variant;
      cfg.model.target = "accel";
    } else {
      throw ConfigError("model.preset: expected 'desk', 'full' or 'custom'");
    }
    cfg.model.window_w = get_int(m, mp, "window_w", cfg.model.window_w);
    cfg.model.history_len = get_int(m, mp, "history_len", cfg.model.history_len);
    cfg.model.layers = get_int(m, mp, "layers", cfg.model.layers);
    cfg.model.hidden_dim = get_int(m, mp, "hidden_dim", cfg.model.hidden_dim);
    cfg.model.embed_dim = get_int(m, mp, "embed_dim", cfg.model.embed_dim);
    cfg.model.heads = get_int(m, mp, "heads", cfg.model.heads);
    cfg.model.ffn_mult = get_int(m, mp, "ffn_mult", cfg.model.ffn_mult);
  } else {
    cfg.model = ModelConfig::desk("recurrent", "accel");
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    const std::string tp = "train";
    check_keys(t, tp,
               {"epochs", "batch_size", "lr", "beta1", "beta2", "adam_eps",
                "grad_clip", "patience", "overlap", "split"});
    cfg.train.epochs = get_int(t, tp, "epochs", cfg.train.epochs);
    cfg.train.batch_size = get_int(t, tp, "batch_size", cfg.train.batch_size);
    cfg.train.lr = get_num(t, tp, "lr", cfg.train.lr);
    cfg.train.beta1 = get_num(t, tp, "beta1", cfg.train.beta1);
    cfg.train.beta2 = get_num(t, tp, "beta2", cfg.train.beta2);
    cfg.train.adam_eps = get_num(t, tp, "adam_eps", cfg.train.adam_eps);
    cfg.train.grad_clip = get_num(t, tp, "grad_clip", cfg.train.grad_clip);
    cfg.train.patience = get_int(t, tp, "patience", cfg.train.patience);
    cfg.sequence_overlap = get_num(t, tp, "overlap", cfg.sequence_overlap);
    cfg.split = get_str(t, tp, "split", cfg.split);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    check_keys(e, "eval", {"min_index"});
    cfg.eval_min_index = get_int(e, "eval", "min_index", cfg.eval_min_index);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    const std::string sp = "sweep";
    check_keys(s, sp, {"windows", "variants", "epochs"});
    if (s.contains("windows")) {
      if (!s.at("windows").is_array()) {
        throw ConfigError("sweep.windows: expected an array of integers");
      }
      cfg.sweep.windows.clear();
      for (const auto& w : s.at("windows")) {
        if (!w.is_number_integer()) {
          throw ConfigError("sweep.windows: expected an array of integers");
        }
        cfg.sweep.windows.push_back(w.get<int>());
      }
    }
    if (s.contains("variants")) {
      if (!s.at("variants").is_array()) {
        throw ConfigError("sweep.variants: expected an array of strings");
      }
      cfg.sweep.variants.clear();
      for (const auto& v : s.at("variants")) {
        if (!v.is_string()) {
          throw ConfigError("sweep.variants: expected an array of strings");
        }
        cfg.sweep.variants.push_back(v.get<std::string>());
      }
    }
    cfg.sweep.epochs = get_int(s, sp, "epochs", cfg.sweep.epochs);
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  using namespace cfgdetail;
  Json j;
  j["seed"] = cfg.seed;
  j["recordings"] = Json::array();
  for (const auto& r : cfg.recordings) {
    j["recordings"].push_back(recording_json(r));
  }
  j["calibration"] = {{"enabled", cfg.calibrate},
                      {"window_s", cfg.calib.window_s},
                      {"stride_s", cfg.calib.stride_s},
                      {"min_angle_rad", cfg.calib.min_angle_rad},
                      {"min_axis_separation_rad",
                       cfg.calib.min_axis_separation_rad},
                      {"min_pairs", cfg.calib.min_pairs}};
  j["derive"] = {{"segment_s", cfg.derive.segment_s},
                 {"quadrature", cfg.derive.quadrature == Quadrature::Midpoint
                                    ? "midpoint"
                                    : "left"},
                 {"chain_prior", cfg.derive.chain_prior},
                 {"min_valid_fraction", cfg.derive.min_valid_fraction},
                 {"min_overlap_s", cfg.min_overlap_s}};
  j["model"] = {{"preset", cfg.model_preset},
                {"variant", cfg.model.variant},
                {"window_w", cfg.model.window_w},
                {"history_len", cfg.model.history_len},
                {"layers", cfg.model.layers},
                {"hidden_dim", cfg.model.hidden_dim},
                {"embed_dim", cfg.model.embed_dim},
                {"heads", cfg.model.heads},
                {"ffn_mult", cfg.model.ffn_mult}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"lr", cfg.train.lr},
                {"beta1", cfg.train.beta1},
                {"beta2", cfg.train.beta2},
                {"adam_eps", cfg.train.adam_eps},
                {"grad_clip", cfg.train.grad_clip},
                {"patience", cfg.train.patience},
                {"overlap", cfg.sequence_overlap},
                {"split", cfg.split}};
  j["eval"] = {{"min_index", cfg.eval_min_index}};
  j["sweep"] = {{"windows", cfg.sweep.windows},
                {"variants", cfg.sweep.variants},
                {"epochs", cfg.sweep.epochs}};
  return j;
}

// Two participants, two gaits each, random-walk biases and realistic sensor
// noise. Sized so the whole simulate/calibrate/derive/train/eval chain runs
// in a couple of minutes on a laptop while still showing a clear win.
inline RunConfig default_run_config() {
  RunConfig cfg;
  cfg.seed = 20260822;
  const Quat mount = normalized_canonical(
      Quat(Eigen::AngleAxisd(deg_to_rad(5.0), Vec3::UnitZ()) *
           Eigen::AngleAxisd(deg_to_rad(-2.0), Vec3::UnitY()) *
           Eigen::AngleAxisd(deg_to_rad(3.0), Vec3::UnitX())));
  auto make = [&](const std::string& name, const std::string& participant,
                  const std::string& activity, double b_scale) {
    RecordingSpec s;
    s.name = name;
    s.participant = participant;
    s.activity = activity;
    s.profile = activity == "run" ? run_profile() : walk_profile();
    // Head nod and roll sway: needed anyway for realism, and the mount
    // calibration requires rotation about more than one axis.
    s.profile.pitch_amp = 0.08;
    s.profile.roll_amp = 0.06;
    s.duration_s = 150.0;
    s.imu_rate_hz = 200.0;
    s.pose_rate_hz = 50.0;
    s.bias.mode = "random_walk";
    s.bias.b_a0 = b_scale * Vec3(0.08, -0.05, 0.04);
    s.bias.b_w0 = b_scale * Vec3(0.01, 0.006, -0.009);
    s.bias.walk_sigma_ba = 0.003;
    s.bias.walk_sigma_bw = 0.0003;
    s.noise.sigma_a = 0.02;
    s.noise.sigma_w = 0.002;
    s.mount_q_hi = mount;
    s.seed = 0;  // derived from the run seed
    return s;
  };
  cfg.recordings.push_back(make("walk_a", "A", "walk", 1.0));
  cfg.recordings.push_back(make("run_a", "A", "run", 0.8));
  cfg.recordings.push_back(make("walk_b", "B", "walk", -0.9));
  cfg.recordings.push_back(make("run_b", "B", "run", 1.1));
  cfg.model_preset = "desk";
  cfg.model = ModelConfig::desk("recurrent", "accel");
  cfg.train.epochs = 25;
  cfg.train.batch_size = 8;
  cfg.train.lr = 1e-3;
  cfg.train.patience = 8;
  cfg.split = "holdout:B";
  cfg.sweep.windows = {6, 10, 20, 32};
  cfg.sweep.variants = {"recurrent", "attention"};
  cfg.validate();
  return cfg;
}

}  // namespace inertia
