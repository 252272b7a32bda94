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
// Sequence models that map pooled IMU windows plus the previous bias
// estimate to the current segment's bias (3 channels: accelerometer or
// gyroscope, one model each).
//
// The forward pass is written once as a template over an executor: the tape
// executor records nodes for training, the eager executor evaluates the same
// arithmetic directly for inference. Both see identical parameter values, so
// their outputs agree to rounding.

#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "inertia/autodiff.hpp"
#include "inertia/dataio.hpp"
#include "inertia/errors.hpp"
#include "inertia/rng.hpp"

namespace inertia {

struct ModelConfig {
  std::string variant = "recurrent";  // "recurrent" | "attention"
  std::string target = "accel";       // "accel" | "gyro"
  int window_w = 10;                  // pooled bins per step
  int history_len = 32;               // steps per training sequence
  int layers = 2;                     // stacked cells / encoder+decoder depth
  int hidden_dim = 32;                // recurrent state width
  int embed_dim = 64;                 // attention token width
  int heads = 4;
  int ffn_mult = 4;

  int input_dim() const { return window_w * 6 + 6; }
  int output_dim() const { return 3; }

  void validate() const {
    if (variant != "recurrent" && variant != "attention") {
      throw ConfigError("model: unknown variant '" + variant + "'");
    }
    if (target != "accel" && target != "gyro") {
      throw ConfigError("model: unknown target '" + target + "'");
    }
    if (window_w < 1 || history_len < 1 || layers < 1) {
      throw ConfigError("model: window_w, history_len, layers must be >= 1");
    }
    if (variant == "recurrent" && hidden_dim < 1) {
      throw ConfigError("model: hidden_dim must be >= 1");
    }
    if (variant == "attention") {
      if (embed_dim < 1 || heads < 1 || ffn_mult < 1) {
        throw ConfigError("model: embed_dim, heads, ffn_mult must be >= 1");
      }
      if (embed_dim % heads != 0) {
        throw ConfigError("model: embed_dim must be divisible by heads");
      }
    }
  }

  // Small footprint for laptops and CI.
  static ModelConfig desk(const std::string& variant,
                          const std::string& target) {
    ModelConfig c;
    c.variant = variant;
    c.target = target;
    c.window_w = 10;
    c.history_len = 32;
    if (variant == "recurrent") {
      c.layers = 2;
      c.hidden_dim = 32;
    } else {
      c.layers = 1;
      c.embed_dim = 64;
      c.heads = 4;
    }
    c.validate();
    return c;
  }

  // Full-size configuration.
  static ModelConfig full(const std::string& variant,
                          const std::string& target) {
    ModelConfig c;
    c.variant = variant;
    c.target = target;
    c.window_w = 10;
    if (variant == "recurrent") {
      c.history_len = 32;
      c.layers = 2;
      c.hidden_dim = 256;
    } else {
      c.history_len = 100;
      c.layers = 2;
      c.embed_dim = 512;
      c.heads = 8;
    }
    c.validate();
    return c;
  }
};

inline Json model_config_to_json(const ModelConfig& c) {
  Json j;
  j["variant"] = c.variant;
  j["target"] = c.target;
  j["window_w"] = c.window_w;
  j["history_len"] = c.history_len;
  j["layers"] = c.layers;
  j["hidden_dim"] = c.hidden_dim;
  j["embed_dim"] = c.embed_dim;
  j["heads"] = c.heads;
  j["ffn_mult"] = c.ffn_mult;
  return j;
}

inline ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  try {
    c.variant = j.at("variant").get<std::string>();
    c.target = j.at("target").get<std::string>();
    c.window_w = j.at("window_w").get<int>();
    c.history_len = j.at("history_len").get<int>();
    c.layers = j.at("layers").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ffn_mult = j.at("ffn_mult").get<int>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Feature codec: standardized model inputs/outputs in raw physical units.

class FeatureCodec {
 public:
  FeatureCodec() = default;
  FeatureCodec(Normalization norm, std::string target)
      : norm_(std::move(norm)), target_(std::move(target)) {
    if (target_ != "accel" && target_ != "gyro") {
      throw ConfigError("codec: unknown target '" + target_ + "'");
    }
  }

  const Normalization& norm() const { return norm_; }
  const std::string& target() const { return target_; }
  int target_offset() const { return target_ == "accel" ? 0 : 3; }

  // L x (w*6 + 6): standardized pooled windows followed by the standardized
  // previous-bias channels.
  Eigen::MatrixXd encode_inputs(const Eigen::MatrixXd& features,
                                const Eigen::MatrixXd& prev_bias) const {
    if (features.rows() != prev_bias.rows() || prev_bias.cols() != 6 ||
        features.cols() % 6 != 0) {
      throw DataError("codec: malformed sequence matrices");
    }
    const auto L = features.rows();
    const auto w = features.cols() / 6;
    Eigen::MatrixXd x(L, features.cols() + 6);
    for (Eigen::Index r = 0; r < L; ++r) {
      for (Eigen::Index b = 0; b < w; ++b) {
        for (int c = 0; c < 6; ++c) {
          x(r, b * 6 + c) = (features(r, b * 6 + c) - norm_.feat_mean(c)) /
                            norm_.feat_std(c);
        }
      }
      for (int c = 0; c < 6; ++c) {
        x(r, features.cols() + c) =
            (prev_bias(r, c) - norm_.bias_mean(c)) / norm_.bias_std(c);
      }
    }
    return x;
  }

  Eigen::MatrixXd encode_inputs(const SequenceSample& seq) const {
    return encode_inputs(seq.features, seq.prev_bias);
  }

  // L x 3 standardized targets for this codec's sensor.
  Eigen::MatrixXd encode_targets(const Eigen::MatrixXd& target6) const {
    if (target6.cols() != 6) throw DataError("codec: target must have 6 cols");
    const int off = target_offset();
    Eigen::MatrixXd y(target6.rows(), 3);
    for (Eigen::Index r = 0; r < target6.rows(); ++r) {
      for (int c = 0; c < 3; ++c) {
        y(r, c) = (target6(r, off + c) - norm_.bias_mean(off + c)) /
                  norm_.bias_std(off + c);
      }
    }
    return y;
  }

  // Standardized model output row back to physical units.
  Vec3 decode_output(const Eigen::RowVectorXd& y) const {
    if (y.size() != 3) throw DataError("codec: output row must have 3 cols");
    const int off = target_offset();
    Vec3 out;
    for (int c = 0; c < 3; ++c) {
      out(c) = y(c) * norm_.bias_std(off + c) + norm_.bias_mean(off + c);
    }
    return out;
  }

  // Mean squared error in raw physical units for a standardized prediction.
  double raw_mse(const Eigen::MatrixXd& pred_std,
                 const Eigen::MatrixXd& target_std) const {
    const int off = target_offset();
    double acc = 0.0;
    for (Eigen::Index r = 0; r < pred_std.rows(); ++r) {
      for (int c = 0; c < 3; ++c) {
        const double d =
            (pred_std(r, c) - target_std(r, c)) * norm_.bias_std(off + c);
        acc += d * d;
      }
    }
    return acc / static_cast<double>(pred_std.size());
  }

 private:
  Normalization norm_;
  std::string target_ = "accel";
};

inline Json normalization_to_json(const Normalization& n) {
  auto vec6 = [](const Vec6& v) {
    return Json{v(0), v(1), v(2), v(3), v(4), v(5)};
  };
  Json j;
  j["feat_mean"] = vec6(n.feat_mean);
  j["feat_std"] = vec6(n.feat_std);
  j["bias_mean"] = vec6(n.bias_mean);
  j["bias_std"] = vec6(n.bias_std);
  return j;
}

inline Normalization normalization_from_json(const Json& j) {
  auto vec6 = [](const Json& a) {
    Vec6 v;
    for (int i = 0; i < 6; ++i) v(i) = a.at(i).get<double>();
    return v;
  };
  Normalization n;
  try {
    n.feat_mean = vec6(j.at("feat_mean"));
    n.feat_std = vec6(j.at("feat_std"));
    n.bias_mean = vec6(j.at("bias_mean"));
    n.bias_std = vec6(j.at("bias_std"));
  } catch (const Json::exception& e) {
    throw DataError(std::string("normalization: ") + e.what());
  }
  return n;
}

// ---------------------------------------------------------------------------
// Executors

namespace detail {

// Records ops on a tape; handles are node ids.
struct TapeExec {
  ad::Tape* tape;
  const std::vector<int>* param_ids;
  using H = int;
  H param(int i) const { return (*param_ids)[static_cast<std::size_t>(i)]; }
  H leaf(const ad::Mat& m) const { return tape->leaf(m); }
  H matmul(H a, H b) const { return tape->matmul(a, b); }
  H matmul_nt(H a, H b) const { return tape->matmul_nt(a, b); }
  H add(H a, H b) const { return tape->add(a, b); }
  H add_rowvec(H a, H b) const { return tape->add_rowvec(a, b); }
  H mul(H a, H b) const { return tape->mul(a, b); }
  H scale(H a, double s) const { return tape->scale(a, s); }
  H sigmoid(H a) const { return tape->sigmoid(a); }
  H tanh(H a) const { return tape->tanh(a); }
  H relu(H a) const { return tape->relu(a); }
  H softmax_rows(H a) const { return tape->softmax_rows(a); }
  H slice_rows(H a, int r0, int n) const { return tape->slice_rows(a, r0, n); }
  H slice_cols(H a, int c0, int n) const { return tape->slice_cols(a, c0, n); }
  H concat_cols(H a, H b) const { return tape->concat_cols(a, b); }
  H concat_rows(H a, H b) const { return tape->concat_rows(a, b); }
  H layer_norm_rows(H a, H g, H b, double eps) const {
    return tape->layer_norm_rows(a, g, b, eps);
  }
};

// Evaluates the same arithmetic directly; handles are values.
struct EagerExec {
  const ad::ParamStore* params;
  using H = ad::Mat;
  H param(int i) const {
    return params->entries()[static_cast<std::size_t>(i)].value;
  }
  H leaf(const ad::Mat& m) const { return m; }
  H matmul(const H& a, const H& b) const { return a * b; }
  H matmul_nt(const H& a, const H& b) const { return a * b.transpose(); }
  H add(const H& a, const H& b) const { return a + b; }
  H add_rowvec(const H& a, const H& b) const {
    H out = a;
    out.rowwise() += b.row(0);
    return out;
  }
  H mul(const H& a, const H& b) const { return a.cwiseProduct(b); }
  H scale(const H& a, double s) const { return a * s; }
  H sigmoid(const H& a) const {
    return a.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  }
  H tanh(const H& a) const {
    return a.unaryExpr([](double x) { return std::tanh(x); });
  }
  H relu(const H& a) const { return a.cwiseMax(0.0); }
  H softmax_rows(const H& a) const {
    H y(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double m = a.row(r).maxCoeff();
      Eigen::RowVectorXd e = (a.row(r).array() - m).exp().matrix();
      y.row(r) = e / e.sum();
    }
    return y;
  }
  H slice_rows(const H& a, int r0, int n) const { return a.middleRows(r0, n); }
  H slice_cols(const H& a, int c0, int n) const { return a.middleCols(c0, n); }
  H concat_cols(const H& a, const H& b) const {
    H out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
  }
  H concat_rows(const H& a, const H& b) const {
    H out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
  }
  H layer_norm_rows(const H& x, const H& g, const H& b, double eps) const {
    const auto n = static_cast<double>(x.cols());
    H out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double mu = x.row(r).mean();
      const double var = (x.row(r).array() - mu).square().sum() / n;
      const double inv = 1.0 / std::sqrt(var + eps);
      out.row(r) =
          (((x.row(r).array() - mu) * inv) * g.row(0).array() + b.row(0).array())
              .matrix();
    }
    return out;
  }
};

inline ad::Mat xavier_uniform(Rng& rng, int rows, int cols) {
  const double limit = std::sqrt(6.0 / (static_cast<double>(rows) + cols));
  ad::Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  }
  return m;
}

// Sinusoidal position rows, dim must be even.
inline ad::Mat sinusoidal_positions(int n, int dim) {
  ad::Mat pe(n, dim);
  for (int p = 0; p < n; ++p) {
    for (int i = 0; i < dim / 2; ++i) {
      const double rate = std::pow(10000.0, -2.0 * i / static_cast<double>(dim));
      pe(p, 2 * i) = std::sin(p * rate);
      pe(p, 2 * i + 1) = std::cos(p * rate);
    }
  }
  return pe;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// BiasModel

class BiasModel {
 public:
  explicit BiasModel(ModelConfig cfg, std::uint64_t init_seed = 1)
      : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng = Rng(init_seed).derive("model-init");
    if (cfg_.variant == "recurrent") {
      init_recurrent(rng);
    } else {
      init_attention(rng);
    }
  }

  // Rebuilds the parameter skeleton for cfg and pours in loaded values.
  BiasModel(ModelConfig cfg, const std::vector<ad::Mat>& values)
      : BiasModel(std::move(cfg), 1) {
    auto& entries = params_.entries();
    if (values.size() != entries.size()) {
      throw DataError("model: parameter count mismatch on load");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (values[i].rows() != entries[i].value.rows() ||
          values[i].cols() != entries[i].value.cols()) {
        throw DataError("model: parameter shape mismatch on load for '" +
                        entries[i].name + "'");
      }
      entries[i].value = values[i];
    }
  }

  const ModelConfig& config() const { return cfg_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }

  // Training path: records the forward pass on the tape. x is
  // L x input_dim standardized; the result node is L x 3.
  int forward_tape(ad::Tape& tape, const std::vector<int>& param_ids,
                   const Eigen::MatrixXd& x) const {
    check_input(x);
    detail::TapeExec exec{&tape, &param_ids};
    return forward_impl(exec, tape.leaf(x));
  }

  // Inference path: evaluates the same arithmetic eagerly.
  Eigen::MatrixXd forward_eager(const Eigen::MatrixXd& x) const {
    check_input(x);
    detail::EagerExec exec{&params_};
    return forward_impl(exec, x);
  }

 private:
  void check_input(const Eigen::MatrixXd& x) const {
    if (x.cols() != cfg_.input_dim() || x.rows() < 1) {
      throw DataError("model: input must be L x " +
                      std::to_string(cfg_.input_dim()));
    }
    if (cfg_.variant == "attention" && x.rows() > cfg_.history_len) {
      throw DataError("model: attention context exceeds history length");
    }
    if (!x.allFinite()) throw NumericalError("model: non-finite input");
  }

  int add_param(const std::string& name, ad::Mat init) {
    return params_.add(name, std::move(init));
  }

  void init_recurrent(Rng& rng) {
    int in = cfg_.input_dim();
    const int H = cfg_.hidden_dim;
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "lstm" + std::to_string(l) + ".";
      add_param(p + "w_ih", detail::xavier_uniform(rng, 4 * H, in));
      add_param(p + "w_hh", detail::xavier_uniform(rng, 4 * H, H));
      // Forget-gate offset starts at 1 so early training does not flush the
      // cell state.
      ad::Mat b = ad::Mat::Zero(1, 4 * H);
      b.middleCols(H, H).setOnes();
      add_param(p + "b", std::move(b));
      in = H;
    }
    add_param("head.w", detail::xavier_uniform(rng, 3, H));
    add_param("head.b", ad::Mat::Zero(1, 3));
  }

  void init_attention(Rng& rng) {
    const int E = cfg_.embed_dim;
    const int F = cfg_.ffn_mult * E;
    add_param("enc_in.w", detail::xavier_uniform(rng, E, cfg_.window_w * 6));
    add_param("enc_in.b", ad::Mat::Zero(1, E));
    add_param("dec_in.w", detail::xavier_uniform(rng, E, 6));
    add_param("dec_in.b", ad::Mat::Zero(1, E));
    auto add_mha = [&](const std::string& p) {
      add_param(p + "wq", detail::xavier_uniform(rng, E, E));
      add_param(p + "wk", detail::xavier_uniform(rng, E, E));
      add_param(p + "wv", detail::xavier_uniform(rng, E, E));
      add_param(p + "wo", detail::xavier_uniform(rng, E, E));
      add_param(p + "bo", ad::Mat::Zero(1, E));
    };
    auto add_ln = [&](const std::string& p) {
      add_param(p + "gamma", ad::Mat::Ones(1, E));
      add_param(p + "beta", ad::Mat::Zero(1, E));
    };
    auto add_ffn = [&](const std::string& p) {
      add_param(p + "w1", detail::xavier_uniform(rng, F, E));
      add_param(p + "b1", ad::Mat::Zero(1, F));
      add_param(p + "w2", detail::xavier_uniform(rng, E, F));
      add_param(p + "b2", ad::Mat::Zero(1, E));
    };
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "enc" + std::to_string(l) + ".";
      add_ln(p + "ln1.");
      add_mha(p + "attn.");
      add_ln(p + "ln2.");
      add_ffn(p + "ffn.");
    }
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "dec" + std::to_string(l) + ".";
      add_ln(p + "ln1.");
      add_mha(p + "self.");
      add_ln(p + "ln2.");
      add_mha(p + "cross.");
      add_ln(p + "ln3.");
      add_ffn(p + "ffn.");
    }
    add_ln("final_ln.");
    add_param("head.w", detail::xavier_uniform(rng, 3, E));
    add_param("head.b", ad::Mat::Zero(1, 3));
  }

  int param_index(const std::string& name) const {
    const auto& entries = params_.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].name == name) return static_cast<int>(i);
    }
    throw ConfigError("model: missing parameter '" + name + "'");
  }

  template <class Exec>
  typename Exec::H forward_impl(const Exec& exec, typename Exec::H x) const {
    if (cfg_.variant == "recurrent") return forward_recurrent(exec, x);
    return forward_attention(exec, x);
  }

  // Both variants use a residual head: the network output is an increment
  // on the standardized previous-bias input channels, so the identity map
  // (bias carries over from the last step) is the zero-parameter default
  // and training only has to model the correction.
  int residual_col() const {
    return cfg_.window_w * 6 + (cfg_.target == "accel" ? 0 : 3);
  }

  template <class Exec>
  typename Exec::H forward_recurrent(const Exec& exec,
                                     typename Exec::H x) const {
    using H = typename Exec::H;
    const int Hd = cfg_.hidden_dim;
    const int L = rows_of(exec, x);

    std::vector<H> h, c;
    const H zero_row = exec.leaf(ad::Mat::Zero(1, Hd));
    for (int l = 0; l < cfg_.layers; ++l) {
      h.push_back(zero_row);
      c.push_back(zero_row);
    }
    std::vector<int> w_ih(cfg_.layers), w_hh(cfg_.layers), b(cfg_.layers);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "lstm" + std::to_string(l) + ".";
      w_ih[l] = param_index(p + "w_ih");
      w_hh[l] = param_index(p + "w_hh");
      b[l] = param_index(p + "b");
    }
    const int head_w = param_index("head.w");
    const int head_b = param_index("head.b");

    H out{};
    for (int t = 0; t < L; ++t) {
      H xt = exec.slice_rows(x, t, 1);
      const H prev_t = exec.slice_cols(xt, residual_col(), 3);
      for (int l = 0; l < cfg_.layers; ++l) {
        H z = exec.add_rowvec(
            exec.add(exec.matmul_nt(xt, exec.param(w_ih[l])),
                     exec.matmul_nt(h[static_cast<std::size_t>(l)],
                                    exec.param(w_hh[l]))),
            exec.param(b[l]));
        H gi = exec.sigmoid(exec.slice_cols(z, 0, Hd));
        H gf = exec.sigmoid(exec.slice_cols(z, Hd, Hd));
        H gg = exec.tanh(exec.slice_cols(z, 2 * Hd, Hd));
        H go = exec.sigmoid(exec.slice_cols(z, 3 * Hd, Hd));
        c[static_cast<std::size_t>(l)] =
            exec.add(exec.mul(gf, c[static_cast<std::size_t>(l)]),
                     exec.mul(gi, gg));
        h[static_cast<std::size_t>(l)] =
            exec.mul(go, exec.tanh(c[static_cast<std::size_t>(l)]));
        xt = h[static_cast<std::size_t>(l)];
      }
      H yt = exec.add(exec.add_rowvec(exec.matmul_nt(xt, exec.param(head_w)),
                                      exec.param(head_b)),
                      prev_t);
      out = (t == 0) ? yt : exec.concat_rows(out, yt);
    }
    return out;
  }

  template <class Exec>
  typename Exec::H mha(const Exec& exec, const std::string& prefix,
                       typename Exec::H q_in, typename Exec::H kv_in,
                       const ad::Mat& mask) const {
    using H = typename Exec::H;
    const int E = cfg_.embed_dim;
    const int nh = cfg_.heads;
    const int dh = E / nh;
    H q = exec.matmul_nt(q_in, exec.param(param_index(prefix + "wq")));
    H k = exec.matmul_nt(kv_in, exec.param(param_index(prefix + "wk")));
    H v = exec.matmul_nt(kv_in, exec.param(param_index(prefix + "wv")));
    const H mask_leaf = exec.leaf(mask);
    H heads{};
    for (int hd = 0; hd < nh; ++hd) {
      H qh = exec.slice_cols(q, hd * dh, dh);
      H kh = exec.slice_cols(k, hd * dh, dh);
      H vh = exec.slice_cols(v, hd * dh, dh);
      H scores = exec.add(
          exec.scale(exec.matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh))),
          mask_leaf);
      H attn = exec.softmax_rows(scores);
      H oh = exec.matmul(attn, vh);
      heads = (hd == 0) ? oh : exec.concat_cols(heads, oh);
    }
    return exec.add_rowvec(
        exec.matmul_nt(heads, exec.param(param_index(prefix + "wo"))),
        exec.param(param_index(prefix + "bo")));
  }

  template <class Exec>
  typename Exec::H ln(const Exec& exec, const std::string& prefix,
                      typename Exec::H x) const {
    return exec.layer_norm_rows(x, exec.param(param_index(prefix + "gamma")),
                                exec.param(param_index(prefix + "beta")),
                                1e-5);
  }

  template <class Exec>
  typename Exec::H ffn(const Exec& exec, const std::string& prefix,
                       typename Exec::H x) const {
    using H = typename Exec::H;
    H h = exec.relu(exec.add_rowvec(
        exec.matmul_nt(x, exec.param(param_index(prefix + "w1"))),
        exec.param(param_index(prefix + "b1"))));
    return exec.add_rowvec(
        exec.matmul_nt(h, exec.param(param_index(prefix + "w2"))),
        exec.param(param_index(prefix + "b2")));
  }

  // Pre-norm encoder-decoder. Encoder tokens are the pooled windows,
  // decoder tokens the previous-bias inputs; every attention (self and
  // cross) is causally masked so step k never sees data past segment k.
  template <class Exec>
  typename Exec::H forward_attention(const Exec& exec,
                                     typename Exec::H x) const {
    using H = typename Exec::H;
    const int L = rows_of(exec, x);
    const int wdim = cfg_.window_w * 6;

    ad::Mat mask = ad::Mat::Zero(L, L);
    for (int r = 0; r < L; ++r) {
      for (int c = r + 1; c < L; ++c) mask(r, c) = -1e9;
    }
    const ad::Mat pe = detail::sinusoidal_positions(L, cfg_.embed_dim);
    const H pe_leaf = exec.leaf(pe);

    H enc_tokens = exec.slice_cols(x, 0, wdim);
    H dec_tokens = exec.slice_cols(x, wdim, 6);
    H enc = exec.add(
        exec.add_rowvec(
            exec.matmul_nt(enc_tokens, exec.param(param_index("enc_in.w"))),
            exec.param(param_index("enc_in.b"))),
        pe_leaf);
    H dec = exec.add(
        exec.add_rowvec(
            exec.matmul_nt(dec_tokens, exec.param(param_index("dec_in.w"))),
            exec.param(param_index("dec_in.b"))),
        pe_leaf);

    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "enc" + std::to_string(l) + ".";
      H n1 = ln(exec, p + "ln1.", enc);
      enc = exec.add(enc, mha(exec, p + "attn.", n1, n1, mask));
      enc = exec.add(enc, ffn(exec, p + "ffn.", ln(exec, p + "ln2.", enc)));
    }
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "dec" + std::to_string(l) + ".";
      H n1 = ln(exec, p + "ln1.", dec);
      dec = exec.add(dec, mha(exec, p + "self.", n1, n1, mask));
      dec = exec.add(dec, mha(exec, p + "cross.", ln(exec, p + "ln2.", dec),
                              enc, mask));
      dec = exec.add(dec, ffn(exec, p + "ffn.", ln(exec, p + "ln3.", dec)));
    }
    H y = ln(exec, "final_ln.", dec);
    return exec.add(
        exec.add_rowvec(exec.matmul_nt(y, exec.param(param_index("head.w"))),
                        exec.param(param_index("head.b"))),
        exec.slice_cols(x, residual_col(), 3));
  }

  static int rows_of(const detail::TapeExec& exec, int h) {
    return static_cast<int>(exec.tape->value(h).rows());
  }
  static int rows_of(const detail::EagerExec&, const ad::Mat& h) {
    return static_cast<int>(h.rows());
  }

  ModelConfig cfg_;
  ad::ParamStore params_;
};

// Streaming inference for the recurrent variant: feed one standardized step
// row at a time; matches the batch forward pass exactly.
class RecurrentSession {
 public:
  explicit RecurrentSession(const BiasModel& model) : model_(&model) {
    const auto& cfg = model.config();
    if (cfg.variant != "recurrent") {
      throw ConfigError("recurrent session: model is not recurrent");
    }
    h_.assign(static_cast<std::size_t>(cfg.layers),
              Eigen::RowVectorXd::Zero(cfg.hidden_dim));
    c_ = h_;
  }

  void reset() {
    for (auto& v : h_) v.setZero();
    for (auto& v : c_) v.setZero();
  }

  Eigen::RowVectorXd step(const Eigen::RowVectorXd& x_row) {
    const auto& cfg = model_->config();
    if (x_row.size() != cfg.input_dim()) {
      throw DataError("recurrent session: bad input width");
    }
    const auto& params = model_->params();
    const int H = cfg.hidden_dim;
    Eigen::RowVectorXd xt = x_row;
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string p = "lstm" + std::to_string(l) + ".";
      const auto& w_ih = params.value(p + "w_ih");
      const auto& w_hh = params.value(p + "w_hh");
      const auto& b = params.value(p + "b");
      Eigen::RowVectorXd z = xt * w_ih.transpose() +
                             h_[static_cast<std::size_t>(l)] * w_hh.transpose() +
                             b.row(0);
      auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
      Eigen::RowVectorXd gi = z.segment(0, H).unaryExpr(sig);
      Eigen::RowVectorXd gf = z.segment(H, H).unaryExpr(sig);
      Eigen::RowVectorXd gg =
          z.segment(2 * H, H).unaryExpr([](double v) { return std::tanh(v); });
      Eigen::RowVectorXd go = z.segment(3 * H, H).unaryExpr(sig);
      c_[static_cast<std::size_t>(l)] =
          gf.cwiseProduct(c_[static_cast<std::size_t>(l)]) +
          gi.cwiseProduct(gg);
      h_[static_cast<std::size_t>(l)] =
          go.cwiseProduct(c_[static_cast<std::size_t>(l)].unaryExpr(
              [](double v) { return std::tanh(v); }));
      xt = h_[static_cast<std::size_t>(l)];
    }
    const int res_col =
        cfg.window_w * 6 + (cfg.target == "accel" ? 0 : 3);
    return xt * params.value("head.w").transpose() +
           params.value("head.b").row(0) + x_row.segment(res_col, 3);
  }

 private:
  const BiasModel* model_;
  std::vector<Eigen::RowVectorXd> h_;
  std::vector<Eigen::RowVectorXd> c_;
};

}  // namespace inertia
