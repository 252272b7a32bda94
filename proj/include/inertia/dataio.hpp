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
// Recording persistence and dataset assembly.
//
// On-disk layout of one recording directory:
//   manifest.json   stream rates, tags, file roles, synthetic ground truth
//   imu.csv         t,ax,ay,az,gx,gy,gz          (IMU axes)
//   poses.csv       t,px,py,pz,qw,qx,qy,qz       (helmet frame, q_WH)
//   true_vel.csv    t,vx,vy,vz                   (synthetic truth, optional)
//   true_bias.csv   t,bax,bay,baz,bwx,bwy,bwz    (synthetic truth, optional)
// Bias sequences are serialized as JSONL, one record per segment.
//
// All floating-point text is written with round-trip precision ("%.17g"), so
// a write/read cycle is bit-exact and repeated runs produce byte-identical
// files.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "inertia/errors.hpp"
#include "inertia/geom.hpp"
#include "inertia/gtbias.hpp"
#include "inertia/log.hpp"
#include "inertia/preint.hpp"
#include "inertia/simkit.hpp"

namespace inertia {

using Json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw DataError(context + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') {
    out.back().remove_suffix(1);
  }
  return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) {
    throw ConfigError("cannot open file for reading: " + path.string());
  }
  return f;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) {
    throw ConfigError("cannot open file for writing: " + path.string());
  }
  return f;
}

}  // namespace detail

struct CsvReadReport {
  std::size_t rows = 0;
  std::size_t duplicates_dropped = 0;
};

// Generic numeric CSV reader: validates the exact header, parses rows of
// doubles, enforces monotone timestamps in column 0 (exact duplicates are
// dropped and counted; decreasing timestamps are a data error).
inline std::vector<std::vector<double>> read_numeric_csv(
    const std::filesystem::path& path, const std::string& expected_header,
    CsvReadReport* report = nullptr) {
  auto f = detail::open_input(path);
  std::string line;
  if (!std::getline(f, line)) {
    throw DataError(path.string() + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw DataError(path.string() + ": header mismatch, expected '" +
                    expected_header + "' got '" + line + "'");
  }
  const std::size_t n_cols =
      detail::split_csv_line(expected_header).size();
  std::vector<std::vector<double>> rows;
  CsvReadReport rep;
  double last_t = -std::numeric_limits<double>::infinity();
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != n_cols) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(n_cols) + " columns");
    }
    std::vector<double> row(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
      row[c] = detail::parse_double(
          cells[c], path.string() + ":" + std::to_string(line_no));
      if (!std::isfinite(row[c])) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": non-finite value");
      }
    }
    if (row[0] == last_t) {
      rep.duplicates_dropped += 1;
      continue;
    }
    if (row[0] < last_t) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": timestamps decrease");
    }
    last_t = row[0];
    rows.push_back(std::move(row));
  }
  rep.rows = rows.size();
  if (rep.duplicates_dropped > 0) {
    log::info(path.string() + ": dropped " +
              std::to_string(rep.duplicates_dropped) +
              " duplicate timestamp rows");
  }
  if (report != nullptr) *report = rep;
  return rows;
}

inline constexpr const char* kImuHeader = "t,ax,ay,az,gx,gy,gz";
inline constexpr const char* kPoseHeader = "t,px,py,pz,qw,qx,qy,qz";
inline constexpr const char* kVelHeader = "t,vx,vy,vz";
inline constexpr const char* kBiasHeader = "t,bax,bay,baz,bwx,bwy,bwz";

inline void write_imu_csv(const std::filesystem::path& path,
                          std::span<const ImuSample> samples) {
  auto f = detail::open_output(path);
  f << kImuHeader << "\n";
  for (const auto& s : samples) {
    f << format_double(s.t) << ',' << format_double(s.accel.x()) << ','
      << format_double(s.accel.y()) << ',' << format_double(s.accel.z()) << ','
      << format_double(s.gyro.x()) << ',' << format_double(s.gyro.y()) << ','
      << format_double(s.gyro.z()) << "\n";
  }
}

inline std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path,
                                           CsvReadReport* report = nullptr) {
  const auto rows = read_numeric_csv(path, kImuHeader, report);
  std::vector<ImuSample> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out[i] = {r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])};
  }
  return out;
}

inline void write_poses_csv(const std::filesystem::path& path,
                            std::span<const PoseSample> poses) {
  auto f = detail::open_output(path);
  f << kPoseHeader << "\n";
  for (const auto& p : poses) {
    f << format_double(p.t) << ',' << format_double(p.p.x()) << ','
      << format_double(p.p.y()) << ',' << format_double(p.p.z()) << ','
      << format_double(p.q.w()) << ',' << format_double(p.q.x()) << ','
      << format_double(p.q.y()) << ',' << format_double(p.q.z()) << "\n";
  }
}

inline std::vector<PoseSample> read_poses_csv(
    const std::filesystem::path& path, CsvReadReport* report = nullptr) {
  const auto rows = read_numeric_csv(path, kPoseHeader, report);
  std::vector<PoseSample> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    Quat q(r[4], r[5], r[6], r[7]);
    if (std::abs(q.norm() - 1.0) > 1e-3) {
      throw DataError(path.string() + ": pose quaternion far from unit norm");
    }
    out[i] = {r[0], Vec3(r[1], r[2], r[3]), normalized_canonical(q)};
  }
  return out;
}

inline void write_vel_csv(const std::filesystem::path& path,
                          std::span<const PoseSample> vel) {
  auto f = detail::open_output(path);
  f << kVelHeader << "\n";
  for (const auto& v : vel) {
    f << format_double(v.t) << ',' << format_double(v.p.x()) << ','
      << format_double(v.p.y()) << ',' << format_double(v.p.z()) << "\n";
  }
}

inline std::vector<PoseSample> read_vel_csv(const std::filesystem::path& path) {
  const auto rows = read_numeric_csv(path, kVelHeader);
  std::vector<PoseSample> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i] = {rows[i][0], Vec3(rows[i][1], rows[i][2], rows[i][3]),
              Quat::Identity()};
  }
  return out;
}

inline void write_true_bias_csv(const std::filesystem::path& path,
                                std::span<const BiasSample> bias) {
  auto f = detail::open_output(path);
  f << kBiasHeader << "\n";
  for (const auto& b : bias) {
    f << format_double(b.t) << ',' << format_double(b.b_a.x()) << ','
      << format_double(b.b_a.y()) << ',' << format_double(b.b_a.z()) << ','
      << format_double(b.b_w.x()) << ',' << format_double(b.b_w.y()) << ','
      << format_double(b.b_w.z()) << "\n";
  }
}

inline std::vector<BiasSample> read_true_bias_csv(
    const std::filesystem::path& path) {
  const auto rows = read_numeric_csv(path, kBiasHeader);
  std::vector<BiasSample> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out[i] = {r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

struct RecordingManifest {
  std::string name = "rec";
  std::string participant = "A";
  std::string activity = "walk";
  std::string imu_source = "sim";
  double duration_s = 0.0;
  double imu_rate_hz = 0.0;
  double pose_rate_hz = 0.0;
  Vec3 g_w = Vec3(0.0, 0.0, 9.81);
  std::map<std::string, std::string> files;  // role -> relative path
  // Synthetic ground truth (present only for simulated recordings).
  std::optional<Quat> true_mount_q_hi;
  std::optional<std::uint64_t> seed;
};

inline Json manifest_to_json(const RecordingManifest& m) {
  Json j;
  j["name"] = m.name;
  j["participant"] = m.participant;
  j["activity"] = m.activity;
  j["imu_source"] = m.imu_source;
  j["duration_s"] = m.duration_s;
  j["imu_rate_hz"] = m.imu_rate_hz;
  j["pose_rate_hz"] = m.pose_rate_hz;
  j["g_w"] = {m.g_w.x(), m.g_w.y(), m.g_w.z()};
  j["files"] = m.files;
  if (m.true_mount_q_hi) {
    const Quat& q = *m.true_mount_q_hi;
    j["truth"]["mount_q_hi"] = {q.w(), q.x(), q.y(), q.z()};
  }
  if (m.seed) j["truth"]["seed"] = *m.seed;
  return j;
}

inline RecordingManifest manifest_from_json(const Json& j) {
  RecordingManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.participant = j.at("participant").get<std::string>();
    m.activity = j.at("activity").get<std::string>();
    m.imu_source = j.at("imu_source").get<std::string>();
    m.duration_s = j.at("duration_s").get<double>();
    m.imu_rate_hz = j.at("imu_rate_hz").get<double>();
    m.pose_rate_hz = j.at("pose_rate_hz").get<double>();
    const auto& g = j.at("g_w");
    m.g_w = Vec3(g.at(0).get<double>(), g.at(1).get<double>(),
                 g.at(2).get<double>());
    m.files = j.at("files").get<std::map<std::string, std::string>>();
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      if (t.contains("mount_q_hi")) {
        const auto& q = t.at("mount_q_hi");
        m.true_mount_q_hi = Quat(q.at(0).get<double>(), q.at(1).get<double>(),
                                 q.at(2).get<double>(), q.at(3).get<double>());
      }
      if (t.contains("seed")) m.seed = t.at("seed").get<std::uint64_t>();
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  return m;
}

// Writes a full recording directory (streams + manifest).
inline RecordingManifest write_recording(const std::filesystem::path& dir,
                                         const Recording& rec) {
  RecordingManifest m;
  m.name = rec.spec.name;
  m.participant = rec.spec.participant;
  m.activity = rec.spec.activity;
  m.imu_source = rec.spec.imu_source;
  m.duration_s = rec.spec.duration_s;
  m.imu_rate_hz = rec.spec.imu_rate_hz;
  m.pose_rate_hz = rec.spec.pose_rate_hz;
  m.g_w = rec.spec.g_w;
  m.true_mount_q_hi = rec.spec.mount_q_hi;
  m.seed = rec.spec.seed;
  m.files = {{"imu", "imu.csv"},
             {"poses", "poses.csv"},
             {"true_vel", "true_vel.csv"},
             {"true_bias", "true_bias.csv"}};

  std::filesystem::create_directories(dir);
  write_imu_csv(dir / "imu.csv", rec.imu);
  write_poses_csv(dir / "poses.csv", rec.poses);
  write_vel_csv(dir / "true_vel.csv", rec.true_vel);
  write_true_bias_csv(dir / "true_bias.csv", rec.true_bias);
  auto f = detail::open_output(dir / "manifest.json");
  f << manifest_to_json(m).dump(2) << "\n";
  return m;
}

struct LoadedRecording {
  RecordingManifest manifest;
  std::vector<ImuSample> imu;
  std::vector<PoseSample> poses;
  std::vector<PoseSample> true_vel;    // empty if absent
  std::vector<BiasSample> true_bias;   // empty if absent
  CsvReadReport imu_report;
  CsvReadReport pose_report;
};

inline LoadedRecording load_recording(const std::filesystem::path& dir) {
  LoadedRecording lr;
  const auto mpath = dir / "manifest.json";
  auto f = detail::open_input(mpath);
  Json j;
  try {
    f >> j;
  } catch (const Json::exception& e) {
    throw DataError(mpath.string() + ": invalid JSON: " + e.what());
  }
  lr.manifest = manifest_from_json(j);
  const auto need = [&](const std::string& role) {
    auto it = lr.manifest.files.find(role);
    if (it == lr.manifest.files.end()) {
      throw DataError(mpath.string() + ": manifest lacks stream role '" +
                      role + "'");
    }
    return dir / it->second;
  };
  lr.imu = read_imu_csv(need("imu"), &lr.imu_report);
  lr.poses = read_poses_csv(need("poses"), &lr.pose_report);
  if (lr.manifest.files.count("true_vel")) {
    lr.true_vel = read_vel_csv(dir / lr.manifest.files.at("true_vel"));
  }
  if (lr.manifest.files.count("true_bias")) {
    lr.true_bias = read_true_bias_csv(dir / lr.manifest.files.at("true_bias"));
  }
  if (lr.imu.empty() || lr.poses.empty()) {
    throw DataError(dir.string() + ": empty stream");
  }
  return lr;
}

// Clips both streams of a loaded recording to their common time span and
// enforces a minimum usable overlap.
inline void clip_to_overlap(LoadedRecording& lr, double min_overlap_s = 10.0) {
  const double t0 = std::max(lr.imu.front().t, lr.poses.front().t);
  const double t1 = std::min(lr.imu.back().t, lr.poses.back().t);
  if (t1 - t0 < min_overlap_s) {
    std::ostringstream os;
    os << lr.manifest.name << ": stream overlap " << (t1 - t0)
       << " s is below the required " << min_overlap_s << " s";
    throw DataError(os.str());
  }
  auto clip = [&](auto& v) {
    using T = typename std::decay_t<decltype(v)>::value_type;
    v.erase(std::remove_if(v.begin(), v.end(),
                           [&](const T& s) {
                             return s.t < t0 - 1e-9 || s.t > t1 + 1e-9;
                           }),
            v.end());
  };
  clip(lr.imu);
  clip(lr.poses);
  if (!lr.true_vel.empty()) clip(lr.true_vel);
  if (!lr.true_bias.empty()) clip(lr.true_bias);
}

// ---------------------------------------------------------------------------
// Bias sequence JSONL

inline void write_bias_jsonl(const std::filesystem::path& path,
                             std::span<const BiasRecord> records) {
  auto f = detail::open_output(path);
  for (const auto& r : records) {
    Json j;
    j["index"] = r.index;
    j["t_start"] = r.t_start;
    j["t_end"] = r.t_end;
    j["b_a"] = {r.b_a.x(), r.b_a.y(), r.b_a.z()};
    j["b_w"] = {r.b_w.x(), r.b_w.y(), r.b_w.z()};
    j["residual_before"] = r.residual_before;
    j["residual_after"] = r.residual_after;
    j["cond"] = r.cond;
    j["valid"] = r.valid;
    if (!r.valid) j["reason"] = r.reason;
    f << j.dump() << "\n";
  }
}

inline std::vector<BiasRecord> read_bias_jsonl(
    const std::filesystem::path& path) {
  auto f = detail::open_input(path);
  std::vector<BiasRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
      BiasRecord r;
      r.index = j.at("index").get<int>();
      r.t_start = j.at("t_start").get<double>();
      r.t_end = j.at("t_end").get<double>();
      const auto& ba = j.at("b_a");
      const auto& bw = j.at("b_w");
      r.b_a = Vec3(ba.at(0).get<double>(), ba.at(1).get<double>(),
                   ba.at(2).get<double>());
      r.b_w = Vec3(bw.at(0).get<double>(), bw.at(1).get<double>(),
                   bw.at(2).get<double>());
      r.residual_before = j.at("residual_before").get<double>();
      r.residual_after = j.at("residual_after").get<double>();
      r.cond = j.at("cond").get<double>();
      r.valid = j.at("valid").get<bool>();
      if (j.contains("reason")) r.reason = j.at("reason").get<std::string>();
      out.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": bad bias record: " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Step features, windows, normalization

// One 0.5 s step: pooled IMU window, previous-step bias, target bias.
struct StepFeature {
  double t_start = 0.0;
  double t_end = 0.0;
  Eigen::MatrixXd window;  // w x 6 pooled IMU (ax ay az gx gy gz)
  Vec6 prev_bias = Vec6::Zero();
  Vec6 bias = Vec6::Zero();
  bool valid = false;
};

// Pools the IMU samples of each bias segment into w near-equal mean bins.
// Step k's prev_bias is segment k-1's solved bias (zero for the first step);
// a step is valid only if its own record and its predecessor's are.
inline std::vector<StepFeature> build_steps(std::span<const ImuSample> imu,
                                            std::span<const BiasRecord> records,
                                            int w) {
  if (w < 1) throw ConfigError("build_steps: window size must be >= 1");
  std::vector<StepFeature> steps;
  steps.reserve(records.size());
  std::size_t lo = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    StepFeature st;
    st.t_start = r.t_start;
    st.t_end = r.t_end;
    st.window = Eigen::MatrixXd::Zero(w, 6);

    while (lo < imu.size() && imu[lo].t < r.t_start - 1e-9) ++lo;
    std::size_t hi = lo;
    while (hi < imu.size() && imu[hi].t < r.t_end - 1e-9) ++hi;
    const std::size_t n = hi - lo;

    bool ok = r.valid && n >= static_cast<std::size_t>(w);
    if (k > 0 && !records[k - 1].valid) ok = false;
    if (ok) {
      for (int b = 0; b < w; ++b) {
        const std::size_t b0 = lo + (n * static_cast<std::size_t>(b)) / w;
        const std::size_t b1 = lo + (n * static_cast<std::size_t>(b + 1)) / w;
        Vec6 acc = Vec6::Zero();
        for (std::size_t i = b0; i < b1; ++i) {
          acc.segment<3>(0) += imu[i].accel;
          acc.segment<3>(3) += imu[i].gyro;
        }
        st.window.row(b) = (acc / static_cast<double>(b1 - b0)).transpose();
      }
      st.bias.segment<3>(0) = r.b_a;
      st.bias.segment<3>(3) = r.b_w;
      if (k > 0) {
        st.prev_bias.segment<3>(0) = records[k - 1].b_a;
        st.prev_bias.segment<3>(3) = records[k - 1].b_w;
      }
      st.valid = true;
    }
    steps.push_back(std::move(st));
    lo = hi;
  }
  return steps;
}

// One training sequence of L consecutive steps.
struct SequenceSample {
  Eigen::MatrixXd features;   // L x (w*6), row-major step order
  Eigen::MatrixXd prev_bias;  // L x 6
  Eigen::MatrixXd target;     // L x 6
};

// Cuts contiguous valid step runs into overlapping length-L sequences.
// stride = max(1, round(L * (1 - overlap))).
inline std::vector<SequenceSample> build_sequences(
    std::span<const StepFeature> steps, int history_len, double overlap) {
  if (history_len < 1) {
    throw ConfigError("build_sequences: history length must be >= 1");
  }
  if (overlap < 0.0 || overlap >= 1.0) {
    throw ConfigError("build_sequences: overlap must be in [0, 1)");
  }
  const int stride = std::max(
      1, static_cast<int>(std::lround(history_len * (1.0 - overlap))));
  std::vector<SequenceSample> out;

  std::size_t run_start = 0;
  auto flush_run = [&](std::size_t lo, std::size_t hi) {
    const auto l = static_cast<std::size_t>(history_len);
    if (hi - lo < l) return;
    for (std::size_t s = lo; s + l <= hi;
         s += static_cast<std::size_t>(stride)) {
      SequenceSample seq;
      const int w6 = static_cast<int>(steps[s].window.size());
      seq.features.resize(history_len, w6);
      seq.prev_bias.resize(history_len, 6);
      seq.target.resize(history_len, 6);
      for (int i = 0; i < history_len; ++i) {
        const auto& st = steps[s + static_cast<std::size_t>(i)];
        // Row-major flatten of the w x 6 window.
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
            wrow = st.window;
        seq.features.row(i) =
            Eigen::Map<const Eigen::RowVectorXd>(wrow.data(), w6);
        seq.prev_bias.row(i) = st.prev_bias.transpose();
        seq.target.row(i) = st.bias.transpose();
      }
      out.push_back(std::move(seq));
    }
  };
  for (std::size_t i = 0; i <= steps.size(); ++i) {
    if (i == steps.size() || !steps[i].valid) {
      flush_run(run_start, i);
      run_start = i + 1;
    }
  }
  return out;
}

// Per-channel standardization statistics. Feature stats are per IMU channel
// (shared across the w pooled bins); bias stats cover prev-bias inputs and
// targets alike.
struct Normalization {
  Vec6 feat_mean = Vec6::Zero();
  Vec6 feat_std = Vec6::Ones();
  Vec6 bias_mean = Vec6::Zero();
  Vec6 bias_std = Vec6::Ones();
};

inline Normalization compute_normalization(
    std::span<const SequenceSample> seqs) {
  Normalization nz;
  if (seqs.empty()) {
    throw DataError("compute_normalization: no sequences");
  }
  double n_feat = 0.0, n_bias = 0.0;
  Vec6 fsum = Vec6::Zero(), fsq = Vec6::Zero();
  Vec6 bsum = Vec6::Zero(), bsq = Vec6::Zero();
  for (const auto& s : seqs) {
    const int w = static_cast<int>(s.features.cols()) / 6;
    for (int r = 0; r < s.features.rows(); ++r) {
      for (int b = 0; b < w; ++b) {
        for (int c = 0; c < 6; ++c) {
          const double v = s.features(r, b * 6 + c);
          fsum(c) += v;
          fsq(c) += v * v;
        }
      }
      n_feat += w;
      for (int c = 0; c < 6; ++c) {
        const double v = s.target(r, c);
        bsum(c) += v;
        bsq(c) += v * v;
      }
      n_bias += 1.0;
    }
  }
  for (int c = 0; c < 6; ++c) {
    nz.feat_mean(c) = fsum(c) / n_feat;
    const double fv = fsq(c) / n_feat - nz.feat_mean(c) * nz.feat_mean(c);
    nz.feat_std(c) = std::sqrt(std::max(fv, 0.0));
    if (nz.feat_std(c) < 1e-9) nz.feat_std(c) = 1.0;
    nz.bias_mean(c) = bsum(c) / n_bias;
    const double bv = bsq(c) / n_bias - nz.bias_mean(c) * nz.bias_mean(c);
    nz.bias_std(c) = std::sqrt(std::max(bv, 0.0));
    if (nz.bias_std(c) < 1e-9) nz.bias_std(c) = 1.0;
  }
  return nz;
}

// ---------------------------------------------------------------------------
// Dataset and splits

struct DatasetEntry {
  RecordingManifest manifest;
  std::vector<ImuSample> imu;
  std::vector<PoseSample> poses;
  std::vector<BiasSample> true_bias;  // synthetic truth if available
  std::vector<BiasRecord> bias;       // derived sequence
  std::vector<StepFeature> steps;
};

struct SplitResult {
  std::vector<const DatasetEntry*> train;
  std::vector<const DatasetEntry*> val;
  std::vector<const DatasetEntry*> test;
};

// Split policies:
//   "all"              everything in every role (smoke runs)
//   "holdout:<P>"      participant P becomes val+test, the rest trains
//   "motion:<A>-only"  activity A trains; every other activity is val+test
inline SplitResult split_dataset(std::span<const DatasetEntry> entries,
                                 const std::string& policy) {
  SplitResult out;
  auto sorted_view = [&] {
    std::vector<const DatasetEntry*> v;
    v.reserve(entries.size());
    for (const auto& e : entries) v.push_back(&e);
    std::sort(v.begin(), v.end(), [](const auto* a, const auto* b) {
      if (a->manifest.participant != b->manifest.participant) {
        return a->manifest.participant < b->manifest.participant;
      }
      return a->manifest.name < b->manifest.name;
    });
    return v;
  }();

  if (policy == "all") {
    out.train = sorted_view;
    out.val = sorted_view;
    out.test = sorted_view;
    return out;
  }
  if (policy.rfind("holdout:", 0) == 0) {
    const std::string who = policy.substr(8);
    if (who.empty()) throw ConfigError("split: empty holdout participant");
    for (const auto* e : sorted_view) {
      if (e->manifest.participant == who) {
        out.val.push_back(e);
        out.test.push_back(e);
      } else {
        out.train.push_back(e);
      }
    }
    if (out.test.empty()) {
      throw ConfigError("split: no recordings for held-out participant '" +
                        who + "'");
    }
    if (out.train.empty()) {
      throw ConfigError("split: holdout leaves nothing to train on");
    }
    return out;
  }
  if (policy.rfind("motion:", 0) == 0) {
    std::string act = policy.substr(7);
    const std::string suffix = "-only";
    if (act.size() > suffix.size() &&
        act.compare(act.size() - suffix.size(), suffix.size(), suffix) == 0) {
      act = act.substr(0, act.size() - suffix.size());
    } else {
      throw ConfigError("split: motion policy must look like motion:<activity>-only");
    }
    for (const auto* e : sorted_view) {
      if (e->manifest.activity == act) {
        out.train.push_back(e);
      } else {
        out.val.push_back(e);
        out.test.push_back(e);
      }
    }
    if (out.train.empty()) {
      throw ConfigError("split: no recordings with activity '" + act + "'");
    }
    if (out.test.empty()) {
      throw ConfigError("split: motion policy leaves nothing to evaluate on");
    }
    return out;
  }
  throw ConfigError("split: unknown policy '" + policy + "'");
}

}  // namespace inertia
