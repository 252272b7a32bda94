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
// Mini-batch training with Adam, divergence rollback, and binary model
// artifacts.
//
// Optimization runs on standardized features and targets; reported losses
// are converted back to raw physical units so curves for accelerometer and
// gyroscope models are directly comparable to bias magnitudes.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "inertia/autodiff.hpp"
#include "inertia/dataio.hpp"
#include "inertia/models.hpp"
#include "inertia/rng.hpp"

namespace inertia {

struct TrainConfig {
  int epochs = 40;
  int batch_size = 8;     // sequences accumulated per optimizer step
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 5.0;  // global gradient norm ceiling, <= 0 disables
  int patience = 0;        // epochs without val improvement, 0 disables
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs < 1 || batch_size < 1) {
      throw ConfigError("train: epochs and batch_size must be >= 1");
    }
    if (lr <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 ||
        beta2 >= 1.0 || adam_eps <= 0.0) {
      throw ConfigError("train: invalid optimizer constants");
    }
    if (patience < 0) throw ConfigError("train: patience must be >= 0");
  }
};

class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ad::ParamStore& params, const ad::GradientBuffer& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto& entries = params.entries();
    if (entries.size() != grads.grads.size()) {
      throw NumericalError("adam: gradient layout mismatch");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto& e = entries[i];
      const ad::Mat& g = grads.grads[i];
      e.m = beta1_ * e.m + (1.0 - beta1_) * g;
      e.v = beta2_ * e.v + (1.0 - beta2_) * g.cwiseProduct(g);
      const ad::Mat mhat = e.m / bc1;
      const ad::Mat vhat = e.v / bc2;
      e.value -= lr_ * mhat.cwiseQuotient(
                           vhat.cwiseSqrt() +
                           ad::Mat::Constant(vhat.rows(), vhat.cols(), eps_));
    }
  }

  std::uint64_t steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

// Scales the buffer so its global norm is at most max_norm.
inline void clip_gradients(ad::GradientBuffer& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) grads.scale(max_norm / norm);
}

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;  // raw units, mean over training sequences
  double val_mse = 0.0;    // raw units, mean over validation sequences
};

struct TrainResult {
  std::vector<EpochStats> curve;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  bool diverged = false;
  bool early_stopped = false;
};

inline void write_curve_csv(const std::filesystem::path& path,
                            const std::vector<EpochStats>& curve) {
  auto f = detail::open_output(path);
  f << "epoch,train_mse,val_mse\n";
  for (const auto& e : curve) {
    f << e.epoch << ',' << format_double(e.train_mse) << ','
      << format_double(e.val_mse) << "\n";
  }
}

namespace detail {

inline std::vector<ad::Mat> snapshot_params(const ad::ParamStore& params) {
  std::vector<ad::Mat> out;
  out.reserve(params.size());
  for (const auto& e : params.entries()) out.push_back(e.value);
  return out;
}

inline void restore_params(ad::ParamStore& params,
                           const std::vector<ad::Mat>& snap) {
  auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].value = snap[i];
}

}  // namespace detail

// Mean raw-unit MSE of the eager forward pass over a set of sequences.
inline double evaluate_sequences(const BiasModel& model,
                                 const FeatureCodec& codec,
                                 std::span<const SequenceSample> seqs) {
  if (seqs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (const auto& seq : seqs) {
    const Eigen::MatrixXd pred = model.forward_eager(codec.encode_inputs(seq));
    acc += codec.raw_mse(pred, codec.encode_targets(seq.target));
  }
  return acc / static_cast<double>(seqs.size());
}

// Trains in place. On a non-finite loss or gradient the last epoch-end state
// is restored and the result is flagged diverged; a model that never
// completed one epoch throws instead. When a validation set is present the
// best-validation parameters are restored at the end.
inline TrainResult train_model(BiasModel& model, const FeatureCodec& codec,
                               std::span<const SequenceSample> train_seqs,
                               std::span<const SequenceSample> val_seqs,
                               const TrainConfig& cfg,
                               const std::filesystem::path& curve_path = {}) {
  cfg.validate();
  if (train_seqs.empty()) throw DataError("train: no training sequences");

  // Pre-encode once; sequences are immutable during training.
  std::vector<Eigen::MatrixXd> x_train, y_train;
  x_train.reserve(train_seqs.size());
  y_train.reserve(train_seqs.size());
  for (const auto& seq : train_seqs) {
    x_train.push_back(codec.encode_inputs(seq));
    y_train.push_back(codec.encode_targets(seq.target));
  }

  Adam adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  Rng shuffle_rng = Rng(cfg.seed).derive("train-shuffle");
  TrainResult result;
  std::vector<ad::Mat> epoch_snapshot = detail::snapshot_params(model.params());
  std::vector<ad::Mat> best_snapshot = epoch_snapshot;
  int stale_epochs = 0;

  std::vector<std::size_t> order(train_seqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng = shuffle_rng.derive("epoch", static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double train_raw_acc = 0.0;
    bool blew_up = false;
    ad::GradientBuffer grads(model.params());
    std::size_t in_batch = 0;

    auto flush_batch = [&]() {
      if (in_batch == 0) return;
      grads.scale(1.0 / static_cast<double>(in_batch));
      if (!grads.finite()) {
        blew_up = true;
        return;
      }
      clip_gradients(grads, cfg.grad_clip);
      adam.step(model.params(), grads);
      grads.reset();
      in_batch = 0;
    };

    for (std::size_t idx : order) {
      ad::Tape tape;
      const auto ids = model.params().bind(tape);
      const int pred = model.forward_tape(tape, ids, x_train[idx]);
      const int loss = tape.mse(pred, tape.leaf(y_train[idx]));
      const double loss_val = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_val)) {
        blew_up = true;
        break;
      }
      train_raw_acc += codec.raw_mse(tape.value(pred), y_train[idx]);
      tape.backward(loss);
      grads.add_from(tape, ids);
      if (++in_batch == static_cast<std::size_t>(cfg.batch_size)) {
        flush_batch();
        if (blew_up) break;
      }
    }
    if (!blew_up) flush_batch();

    bool params_ok = true;
    for (const auto& e : model.params().entries()) {
      if (!e.value.allFinite()) params_ok = false;
    }
    if (blew_up || !params_ok) {
      if (result.curve.empty()) {
        throw NumericalError("train: diverged before completing one epoch");
      }
      detail::restore_params(model.params(), epoch_snapshot);
      result.diverged = true;
      log::warn("train: non-finite loss or parameters at epoch " +
                std::to_string(epoch) + ", rolled back and stopped");
      break;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_mse = train_raw_acc / static_cast<double>(train_seqs.size());
    stats.val_mse = evaluate_sequences(model, codec, val_seqs);
    result.curve.push_back(stats);
    epoch_snapshot = detail::snapshot_params(model.params());

    const double gate = val_seqs.empty() ? stats.train_mse : stats.val_mse;
    if (gate < result.best_val) {
      result.best_val = gate;
      result.best_epoch = epoch;
      best_snapshot = epoch_snapshot;
      stale_epochs = 0;
    } else if (cfg.patience > 0 && ++stale_epochs >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }

  if (result.best_epoch >= 0) {
    detail::restore_params(model.params(), best_snapshot);
  }
  if (!curve_path.empty()) write_curve_csv(curve_path, result.curve);
  return result;
}

// ---------------------------------------------------------------------------
// Model artifacts
//
// Layout: magic "IKMODEL1" | u32 version | u32 byte-order tag | u64 json_len
// | config+normalization+parameter manifest JSON | u64 n_doubles | raw
// little-endian doubles in parameter order. A FNV-1a fingerprint of the
// payload doubles is stored in the JSON and checked on load.

namespace detail {

inline std::uint64_t fnv1a_bytes(const void* data, std::size_t n,
                                 std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

constexpr char kModelMagic[8] = {'I', 'K', 'M', 'O', 'D', 'E', 'L', '1'};
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint32_t kByteOrderTag = 0x01020304u;

}  // namespace detail

inline void save_model(const std::filesystem::path& path,
                       const BiasModel& model, const FeatureCodec& codec) {
  if (model.config().target != codec.target()) {
    throw ConfigError("save_model: model target '" + model.config().target +
                      "' does not match codec target '" + codec.target() +
                      "'");
  }
  std::vector<double> payload;
  payload.reserve(model.params().scalar_count());
  Json manifest = Json::array();
  for (const auto& e : model.params().entries()) {
    Json p;
    p["name"] = e.name;
    p["rows"] = e.value.rows();
    p["cols"] = e.value.cols();
    manifest.push_back(p);
    for (Eigen::Index c = 0; c < e.value.cols(); ++c) {
      for (Eigen::Index r = 0; r < e.value.rows(); ++r) {
        payload.push_back(e.value(r, c));
      }
    }
  }
  char fp[32];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(detail::fnv1a_bytes(
                    payload.data(), payload.size() * sizeof(double))));

  Json j;
  j["config"] = model_config_to_json(model.config());
  j["normalization"] = normalization_to_json(codec.norm());
  j["params"] = manifest;
  j["fingerprint"] = std::string(fp);
  const std::string header = j.dump();

  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open model file for writing: " + path.string());
  f.write(detail::kModelMagic, sizeof(detail::kModelMagic));
  auto put_u32 = [&](std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  auto put_u64 = [&](std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  put_u32(detail::kModelVersion);
  put_u32(detail::kByteOrderTag);
  put_u64(header.size());
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_u64(payload.size());
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!f) throw ConfigError("failed writing model file: " + path.string());
}

struct LoadedModel {
  BiasModel model;
  FeatureCodec codec;
};

inline LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open model file: " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, detail::kModelMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + ": not a model artifact");
  }
  std::uint32_t version = 0, order = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof(version));
  f.read(reinterpret_cast<char*>(&order), sizeof(order));
  if (!f || version != detail::kModelVersion) {
    throw DataError(path.string() + ": unsupported model version");
  }
  if (order != detail::kByteOrderTag) {
    throw DataError(path.string() + ": byte order mismatch");
  }
  std::uint64_t json_len = 0;
  f.read(reinterpret_cast<char*>(&json_len), sizeof(json_len));
  if (!f || json_len == 0 || json_len > (1ull << 24)) {
    throw DataError(path.string() + ": corrupt header length");
  }
  std::string header(json_len, '\0');
  f.read(header.data(), static_cast<std::streamsize>(json_len));
  if (!f) throw DataError(path.string() + ": truncated header");
  Json j;
  try {
    j = Json::parse(header);
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": bad header JSON: " + e.what());
  }
  std::uint64_t n_doubles = 0;
  f.read(reinterpret_cast<char*>(&n_doubles), sizeof(n_doubles));
  std::vector<double> payload(n_doubles);
  f.read(reinterpret_cast<char*>(payload.data()),
         static_cast<std::streamsize>(n_doubles * sizeof(double)));
  if (!f) throw DataError(path.string() + ": truncated payload");

  char fp[32];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(detail::fnv1a_bytes(
                    payload.data(), payload.size() * sizeof(double))));
  try {
    if (j.at("fingerprint").get<std::string>() != fp) {
      throw DataError(path.string() + ": fingerprint mismatch");
    }
    const ModelConfig cfg = model_config_from_json(j.at("config"));
    const Normalization nz = normalization_from_json(j.at("normalization"));
    std::vector<ad::Mat> values;
    std::size_t off = 0;
    for (const auto& p : j.at("params")) {
      const auto rows = p.at("rows").get<Eigen::Index>();
      const auto cols = p.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0 ||
          off + static_cast<std::size_t>(rows * cols) > payload.size()) {
        throw DataError(path.string() + ": parameter payload overrun");
      }
      values.push_back(Eigen::Map<const ad::Mat>(payload.data() + off, rows,
                                                 cols));
      off += static_cast<std::size_t>(rows * cols);
    }
    if (off != payload.size()) {
      throw DataError(path.string() + ": parameter payload underrun");
    }
    return LoadedModel{BiasModel(cfg, values), FeatureCodec(nz, cfg.target)};
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": bad model header: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Engine self-check: finite-difference validation of the full training
// gradient on miniature models, runnable from the CLI and the test suite.

struct GradientCheckReport {
  double max_rel_recurrent = 0.0;
  double max_rel_attention = 0.0;
  bool pass = false;
};

inline GradientCheckReport gradient_engine_check(double tol = 1e-4) {
  GradientCheckReport report;
  Rng rng(20260822);
  auto check_variant = [&](const std::string& variant) {
    ModelConfig cfg;
    cfg.variant = variant;
    cfg.target = "accel";
    cfg.window_w = 2;
    cfg.history_len = 3;
    cfg.layers = 1;
    cfg.hidden_dim = 4;
    cfg.embed_dim = 8;
    cfg.heads = 2;
    cfg.ffn_mult = 2;
    BiasModel model(cfg, 17);
    ad::Mat x(cfg.history_len, cfg.input_dim());
    ad::Mat target(cfg.history_len, 3);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rng.gaussian();
    }
    for (Eigen::Index r = 0; r < target.rows(); ++r) {
      for (int c = 0; c < 3; ++c) target(r, c) = rng.gaussian();
    }

    auto loss_value = [&]() {
      ad::Tape t;
      const auto ids = model.params().bind(t);
      return t.value(t.mse(model.forward_tape(t, ids, x), t.leaf(target)))(0, 0);
    };
    ad::Tape tape;
    const auto ids = model.params().bind(tape);
    tape.backward(tape.mse(model.forward_tape(tape, ids, x), tape.leaf(target)));
    std::vector<ad::Mat> analytic;
    for (int id : ids) analytic.push_back(tape.grad(id));

    double max_rel = 0.0;
    const double eps = 1e-5;
    auto& entries = model.params().entries();
    for (std::size_t p = 0; p < entries.size(); ++p) {
      ad::Mat& val = entries[p].value;
      const int step = std::max<int>(1, static_cast<int>(val.size()) / 5);
      for (int flat = 0; flat < val.size(); flat += step) {
        const auto r = flat % val.rows();
        const auto c = flat / val.rows();
        const double keep = val(r, c);
        val(r, c) = keep + eps;
        const double fp = loss_value();
        val(r, c) = keep - eps;
        const double fm = loss_value();
        val(r, c) = keep;
        const double fd = (fp - fm) / (2.0 * eps);
        const double an = analytic[p](r, c);
        const double rel =
            std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        max_rel = std::max(max_rel, rel);
      }
    }
    return max_rel;
  };
  report.max_rel_recurrent = check_variant("recurrent");
  report.max_rel_attention = check_variant("attention");
  report.pass =
      report.max_rel_recurrent < tol && report.max_rel_attention < tol;
  return report;
}

}  // namespace inertia
