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

#include <catch2/catch_amalgamated.hpp>

#include "inertia/models.hpp"
#include "inertia/rng.hpp"

using namespace inertia;
using ad::Mat;

namespace {

ModelConfig tiny_config(const std::string& variant) {
  ModelConfig c;
  c.variant = variant;
  c.target = "accel";
  c.window_w = 2;
  c.history_len = 4;
  c.layers = variant == "recurrent" ? 2 : 1;
  c.hidden_dim = 5;
  c.embed_dim = 8;
  c.heads = 2;
  c.ffn_mult = 2;
  c.validate();
  return c;
}

Mat random_input(Rng& rng, int rows, int cols) {
  Mat x(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) x(r, c) = rng.gaussian();
  }
  return x;
}

}  // namespace

TEST_CASE("model config validation and presets", "[models]") {
  REQUIRE_NOTHROW(ModelConfig::desk("recurrent", "accel").validate());
  REQUIRE_NOTHROW(ModelConfig::desk("attention", "gyro").validate());
  REQUIRE_NOTHROW(ModelConfig::full("recurrent", "accel").validate());
  REQUIRE_NOTHROW(ModelConfig::full("attention", "gyro").validate());

  REQUIRE(ModelConfig::desk("recurrent", "accel").hidden_dim == 32);
  REQUIRE(ModelConfig::full("recurrent", "accel").hidden_dim == 256);
  REQUIRE(ModelConfig::full("attention", "accel").embed_dim == 512);
  REQUIRE(ModelConfig::full("attention", "accel").history_len == 100);

  ModelConfig bad = ModelConfig::desk("attention", "accel");
  bad.embed_dim = 30;  // not divisible by 4 heads
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig::desk("recurrent", "accel");
  bad.variant = "gru";
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig::desk("recurrent", "accel");
  bad.target = "magnetometer";
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  const ModelConfig c = ModelConfig::desk("attention", "gyro");
  const ModelConfig back =
      model_config_from_json(Json::parse(model_config_to_json(c).dump()));
  REQUIRE(back.variant == c.variant);
  REQUIRE(back.target == c.target);
  REQUIRE(back.window_w == c.window_w);
  REQUIRE(back.history_len == c.history_len);
  REQUIRE(back.layers == c.layers);
  REQUIRE(back.embed_dim == c.embed_dim);
  REQUIRE(back.heads == c.heads);
}

TEST_CASE("tape and eager forward passes agree", "[models]") {
  Rng rng(70);
  for (const auto* variant : {"recurrent", "attention"}) {
    DYNAMIC_SECTION("variant " << variant) {
      const auto cfg = tiny_config(variant);
      BiasModel model(cfg, 99);
      const Mat x = random_input(rng, cfg.history_len, cfg.input_dim());

      ad::Tape tape;
      const auto ids = model.params().bind(tape);
      const int out = model.forward_tape(tape, ids, x);
      const Mat y_tape = tape.value(out);
      const Mat y_eager = model.forward_eager(x);

      REQUIRE(y_tape.rows() == cfg.history_len);
      REQUIRE(y_tape.cols() == 3);
      REQUIRE((y_tape - y_eager).cwiseAbs().maxCoeff() < 1e-12);
      REQUIRE(y_eager.allFinite());
    }
  }
}

TEST_CASE("predictions are causal in the step index", "[models]") {
  Rng rng(71);
  for (const auto* variant : {"recurrent", "attention"}) {
    DYNAMIC_SECTION("variant " << variant) {
      const auto cfg = tiny_config(variant);
      BiasModel model(cfg, 7);
      const int L = cfg.history_len;
      const Mat x = random_input(rng, L, cfg.input_dim());
      const Mat y = model.forward_eager(x);

      // Perturbing step k must leave predictions for steps < k unchanged.
      for (int k = 1; k < L; ++k) {
        Mat x2 = x;
        x2.row(k).setConstant(5.0);
        const Mat y2 = model.forward_eager(x2);
        REQUIRE((y2.topRows(k) - y.topRows(k)).cwiseAbs().maxCoeff() < 1e-12);
        // And the perturbation is not silently ignored.
        REQUIRE((y2.bottomRows(L - k) - y.bottomRows(L - k))
                    .cwiseAbs()
                    .maxCoeff() > 1e-8);
      }
    }
  }
}

TEST_CASE("attention rejects context longer than its history", "[models]") {
  const auto cfg = tiny_config("attention");
  BiasModel model(cfg, 3);
  Rng rng(72);
  const Mat x = random_input(rng, cfg.history_len + 1, cfg.input_dim());
  REQUIRE_THROWS_AS(model.forward_eager(x), DataError);

  // The recurrent variant has no such limit.
  const auto rcfg = tiny_config("recurrent");
  BiasModel rmodel(rcfg, 3);
  const Mat xr = random_input(rng, rcfg.history_len * 3, rcfg.input_dim());
  REQUIRE_NOTHROW(rmodel.forward_eager(xr));
}

TEST_CASE("streaming recurrent session matches batch forward", "[models]") {
  const auto cfg = tiny_config("recurrent");
  BiasModel model(cfg, 11);
  Rng rng(73);
  const int L = 9;
  const Mat x = random_input(rng, L, cfg.input_dim());
  const Mat y = model.forward_eager(x);

  RecurrentSession session(model);
  for (int t = 0; t < L; ++t) {
    const Eigen::RowVectorXd yt = session.step(x.row(t));
    REQUIRE((yt - y.row(t)).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Reset restarts the state machine.
  session.reset();
  const Eigen::RowVectorXd y0 = session.step(x.row(0));
  REQUIRE((y0 - y.row(0)).cwiseAbs().maxCoeff() < 1e-12);

  REQUIRE_THROWS_AS(RecurrentSession(BiasModel(tiny_config("attention"), 1)),
                    ConfigError);
}

TEST_CASE("model gradients match finite differences", "[models]") {
  Rng rng(74);
  for (const auto* variant : {"recurrent", "attention"}) {
    DYNAMIC_SECTION("variant " << variant) {
      auto cfg = tiny_config(variant);
      cfg.history_len = 3;
      if (cfg.variant == "recurrent") {
        cfg.layers = 1;
        cfg.hidden_dim = 4;
      }
      BiasModel model(cfg, 21);
      const Mat x = random_input(rng, cfg.history_len, cfg.input_dim());
      const Mat target = random_input(rng, cfg.history_len, 3);

      auto loss_value = [&]() {
        ad::Tape t;
        const auto ids = model.params().bind(t);
        const int loss =
            t.mse(model.forward_tape(t, ids, x), t.leaf(target));
        return t.value(loss)(0, 0);
      };

      ad::Tape tape;
      const auto ids = model.params().bind(tape);
      const int loss = tape.mse(model.forward_tape(tape, ids, x),
                                tape.leaf(target));
      tape.backward(loss);
      std::vector<Mat> analytic;
      for (int id : ids) analytic.push_back(tape.grad(id));

      const double eps = 1e-5;
      auto& entries = model.params().entries();
      // Spot-check a deterministic sample of scalars from every parameter.
      for (std::size_t p = 0; p < entries.size(); ++p) {
        Mat& val = entries[p].value;
        const int step = std::max<int>(1, static_cast<int>(val.size()) / 7);
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
          INFO("param " << entries[p].name << " flat " << flat << " fd=" << fd
                        << " analytic=" << an);
          REQUIRE(rel < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("plain gradient steps reduce the loss", "[models]") {
  Rng rng(75);
  for (const auto* variant : {"recurrent", "attention"}) {
    DYNAMIC_SECTION("variant " << variant) {
      const auto cfg = tiny_config(variant);
      BiasModel model(cfg, 31);
      const Mat x = random_input(rng, cfg.history_len, cfg.input_dim());
      Mat target(cfg.history_len, 3);
      for (int r = 0; r < target.rows(); ++r) {
        target.row(r) << 0.4, -0.2, 0.1;
      }

      auto loss_now = [&]() {
        ad::Tape t;
        const auto ids = model.params().bind(t);
        return t.value(t.mse(model.forward_tape(t, ids, x), t.leaf(target)))(0,
                                                                             0);
      };
      const double before = loss_now();
      const double lr = cfg.variant == "recurrent" ? 0.2 : 0.05;
      for (int it = 0; it < 60; ++it) {
        ad::Tape t;
        const auto ids = model.params().bind(t);
        const int loss = t.mse(model.forward_tape(t, ids, x), t.leaf(target));
        t.backward(loss);
        auto& entries = model.params().entries();
        for (std::size_t p = 0; p < entries.size(); ++p) {
          entries[p].value -= lr * t.grad(ids[p]);
        }
      }
      const double after = loss_now();
      REQUIRE(after < 0.3 * before);
      REQUIRE(std::isfinite(after));
    }
  }
}

TEST_CASE("initialization is seed deterministic", "[models]") {
  const auto cfg = tiny_config("attention");
  BiasModel a(cfg, 123);
  BiasModel b(cfg, 123);
  BiasModel c(cfg, 124);
  const auto& ea = a.params().entries();
  const auto& eb = b.params().entries();
  const auto& ec = c.params().entries();
  REQUIRE(ea.size() == eb.size());
  double diff_seed_gap = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    REQUIRE(ea[i].name == eb[i].name);
    REQUIRE(ea[i].value == eb[i].value);
    diff_seed_gap += (ea[i].value - ec[i].value).cwiseAbs().sum();
  }
  REQUIRE(diff_seed_gap > 1e-3);
}

TEST_CASE("parameter reload preserves behavior and checks shapes", "[models]") {
  const auto cfg = tiny_config("recurrent");
  BiasModel model(cfg, 55);
  Rng rng(76);
  const Mat x = random_input(rng, 4, cfg.input_dim());
  const Mat y = model.forward_eager(x);

  std::vector<Mat> values;
  for (const auto& e : model.params().entries()) values.push_back(e.value);
  BiasModel reloaded(cfg, values);
  REQUIRE((reloaded.forward_eager(x) - y).cwiseAbs().maxCoeff() == 0.0);

  values.back() = Mat::Zero(2, 2);
  REQUIRE_THROWS_AS(BiasModel(cfg, values), DataError);
  values.pop_back();
  REQUIRE_THROWS_AS(BiasModel(cfg, values), DataError);
}

TEST_CASE("feature codec standardizes and restores units", "[models]") {
  Normalization nz;
  nz.feat_mean << 1.0, -2.0, 9.5, 0.1, -0.1, 0.0;
  nz.feat_std << 2.0, 1.5, 0.5, 0.2, 0.3, 0.1;
  nz.bias_mean << 0.05, -0.03, 0.02, 0.01, 0.005, -0.008;
  nz.bias_std << 0.02, 0.01, 0.03, 0.002, 0.001, 0.004;

  FeatureCodec accel(nz, "accel");
  FeatureCodec gyro(nz, "gyro");
  REQUIRE(accel.target_offset() == 0);
  REQUIRE(gyro.target_offset() == 3);
  REQUIRE_THROWS_AS(FeatureCodec(nz, "baro"), ConfigError);

  SequenceSample seq;
  const int L = 3, w = 2;
  seq.features.resize(L, w * 6);
  seq.prev_bias.resize(L, 6);
  seq.target.resize(L, 6);
  Rng rng(77);
  for (int r = 0; r < L; ++r) {
    for (int i = 0; i < w * 6; ++i) seq.features(r, i) = rng.gaussian() * 3.0;
    for (int c = 0; c < 6; ++c) {
      seq.prev_bias(r, c) = rng.gaussian() * 0.01;
      seq.target(r, c) = rng.gaussian() * 0.01;
    }
  }
  const Mat x = accel.encode_inputs(seq);
  REQUIRE(x.rows() == L);
  REQUIRE(x.cols() == w * 6 + 6);
  // Spot-check the standardization formula on both halves.
  REQUIRE(x(1, 2) ==
          Catch::Approx((seq.features(1, 2) - nz.feat_mean(2)) / nz.feat_std(2))
              .margin(1e-15));
  REQUIRE(x(2, w * 6 + 4) ==
          Catch::Approx((seq.prev_bias(2, 4) - nz.bias_mean(4)) /
                        nz.bias_std(4))
              .margin(1e-15));

  const Mat ya = accel.encode_targets(seq.target);
  const Mat yg = gyro.encode_targets(seq.target);
  for (int r = 0; r < L; ++r) {
    const Vec3 da = accel.decode_output(ya.row(r));
    const Vec3 dg = gyro.decode_output(yg.row(r));
    REQUIRE((da - seq.target.row(r).segment<3>(0).transpose()).norm() < 1e-14);
    REQUIRE((dg - seq.target.row(r).segment<3>(3).transpose()).norm() < 1e-14);
  }

  // raw_mse equals the mean squared error computed in physical units.
  const Mat pred = ya + Mat::Constant(L, 3, 0.5);
  double manual = 0.0;
  for (int r = 0; r < L; ++r) {
    for (int c = 0; c < 3; ++c) {
      const double d = 0.5 * nz.bias_std(c);
      manual += d * d;
    }
  }
  manual /= static_cast<double>(L * 3);
  REQUIRE(accel.raw_mse(pred, ya) == Catch::Approx(manual).margin(1e-15));

  const auto jz = normalization_from_json(
      Json::parse(normalization_to_json(nz).dump()));
  REQUIRE(jz.feat_mean == nz.feat_mean);
  REQUIRE(jz.bias_std == nz.bias_std);
}
