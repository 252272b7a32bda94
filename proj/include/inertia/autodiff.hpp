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
// Reverse-mode automatic differentiation on dense matrices.
//
// A Tape records one forward pass as a DAG of matrix nodes; backward() seeds
// the loss gradient and replays the recorded adjoint closures in reverse
// topological (= creation) order. Tapes are cheap and single-use: build one
// per forward pass and discard it.

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "inertia/errors.hpp"

namespace inertia::ad {

using Mat = Eigen::MatrixXd;

class Tape {
 public:
  // Registers a leaf node. Gradients are accumulated only into nodes with
  // requires_grad (and into interior nodes on the path to one).
  int leaf(Mat value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, {});
  }

  const Mat& value(int id) const { return nodes_[check(id)].value; }

  const Mat& grad(int id) const {
    const auto& n = nodes_[check(id)];
    if (!n.requires_grad) {
      throw NumericalError("tape: gradient requested for a non-grad node");
    }
    return n.grad;
  }

  int matmul(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.cols() == B.rows(), "matmul: inner dimensions differ");
    int id = push(A * B, needs(a) || needs(b), {a, b});
    record(id, [this, id, a, b]() {
      const Mat& g = nodes_[id].grad;
      if (needs(a)) nodes_[a].grad.noalias() += g * nodes_[b].value.transpose();
      if (needs(b)) nodes_[b].grad.noalias() += nodes_[a].value.transpose() * g;
    });
    return id;
  }

  // a * b^T without materializing the transpose in the graph.
  int matmul_nt(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.cols() == B.cols(), "matmul_nt: trailing dimensions differ");
    int id = push(A * B.transpose(), needs(a) || needs(b), {a, b});
    record(id, [this, id, a, b]() {
      const Mat& g = nodes_[id].grad;
      if (needs(a)) nodes_[a].grad.noalias() += g * nodes_[b].value;
      if (needs(b)) nodes_[b].grad.noalias() += g.transpose() * nodes_[a].value;
    });
    return id;
  }

  int add(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.rows() == B.rows() && A.cols() == B.cols(),
            "add: shape mismatch");
    int id = push(A + B, needs(a) || needs(b), {a, b});
    record(id, [this, id, a, b]() {
      const Mat& g = nodes_[id].grad;
      if (needs(a)) nodes_[a].grad += g;
      if (needs(b)) nodes_[b].grad += g;
    });
    return id;
  }

  // a (m x n) plus a broadcast row vector b (1 x n).
  int add_rowvec(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(B.rows() == 1 && A.cols() == B.cols(),
            "add_rowvec: expects a 1 x cols(a) row vector");
    Mat out = A;
    out.rowwise() += B.row(0);
    int id = push(std::move(out), needs(a) || needs(b), {a, b});
    record(id, [this, id, a, b]() {
      const Mat& g = nodes_[id].grad;
      if (needs(a)) nodes_[a].grad += g;
      if (needs(b)) nodes_[b].grad += g.colwise().sum();
    });
    return id;
  }

  int mul(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.rows() == B.rows() && A.cols() == B.cols(),
            "mul: shape mismatch");
    int id = push(A.cwiseProduct(B), needs(a) || needs(b), {a, b});
    record(id, [this, id, a, b]() {
      const Mat& g = nodes_[id].grad;
      if (needs(a)) nodes_[a].grad += g.cwiseProduct(nodes_[b].value);
      if (needs(b)) nodes_[b].grad += g.cwiseProduct(nodes_[a].value);
    });
    return id;
  }

  int scale(int a, double s) {
    int id = push(value(a) * s, needs(a), {a});
    record(id, [this, id, a, s]() {
      if (needs(a)) nodes_[a].grad += nodes_[id].grad * s;
    });
    return id;
  }

  int sigmoid(int a) {
    Mat y = value(a).unaryExpr(
        [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    int id = push(std::move(y), needs(a), {a});
    record(id, [this, id, a]() {
      if (!needs(a)) return;
      const Mat& y = nodes_[id].value;
      nodes_[a].grad +=
          nodes_[id].grad.cwiseProduct(y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y));
    });
    return id;
  }

  int tanh(int a) {
    Mat y = value(a).unaryExpr([](double x) { return std::tanh(x); });
    int id = push(std::move(y), needs(a), {a});
    record(id, [this, id, a]() {
      if (!needs(a)) return;
      const Mat& y = nodes_[id].value;
      nodes_[a].grad += nodes_[id].grad.cwiseProduct(
          Mat::Ones(y.rows(), y.cols()) - y.cwiseProduct(y));
    });
    return id;
  }

  int relu(int a) {
    Mat y = value(a).cwiseMax(0.0);
    int id = push(std::move(y), needs(a), {a});
    record(id, [this, id, a]() {
      if (!needs(a)) return;
      const Mat& x = nodes_[a].value;
      nodes_[a].grad += nodes_[id].grad.cwiseProduct(
          x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    });
    return id;
  }

  // Row-wise softmax with the max-subtraction trick.
  int softmax_rows(int a) {
    const Mat& X = value(a);
    Mat y(X.rows(), X.cols());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double m = X.row(r).maxCoeff();
      Eigen::RowVectorXd e =
          (X.row(r).array() - m).exp().matrix();
      y.row(r) = e / e.sum();
    }
    int id = push(std::move(y), needs(a), {a});
    record(id, [this, id, a]() {
      if (!needs(a)) return;
      const Mat& y = nodes_[id].value;
      const Mat& g = nodes_[id].grad;
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double dot = g.row(r).dot(y.row(r));
        nodes_[a].grad.row(r) +=
            y.row(r).cwiseProduct(g.row(r) - Eigen::RowVectorXd::Constant(
                                                 y.cols(), dot));
      }
    });
    return id;
  }

  int slice_rows(int a, int r0, int n) {
    const Mat& A = value(a);
    require(r0 >= 0 && n >= 1 && r0 + n <= A.rows(), "slice_rows: bad range");
    int id = push(A.middleRows(r0, n), needs(a), {a});
    record(id, [this, id, a, r0, n]() {
      if (needs(a)) nodes_[a].grad.middleRows(r0, n) += nodes_[id].grad;
    });
    return id;
  }

  int slice_cols(int a, int c0, int n) {
    const Mat& A = value(a);
    require(c0 >= 0 && n >= 1 && c0 + n <= A.cols(), "slice_cols: bad range");
    int id = push(A.middleCols(c0, n), needs(a), {a});
    record(id, [this, id, a, c0, n]() {
      if (needs(a)) nodes_[a].grad.middleCols(c0, n) += nodes_[id].grad;
    });
    return id;
  }

  int concat_cols(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.rows() == B.rows(), "concat_cols: row mismatch");
    // Copy the widths now: push() may grow the node vector and invalidate
    // the A and B references.
    const int ca = static_cast<int>(A.cols());
    const int cb = static_cast<int>(B.cols());
    Mat out(A.rows(), A.cols() + B.cols());
    out << A, B;
    int id = push(std::move(out), needs(a) || needs(b), {a, b});
    record(id, [this, id, a, b, ca, cb]() {
      const Mat& g = nodes_[id].grad;
      if (needs(a)) nodes_[a].grad += g.leftCols(ca);
      if (needs(b)) nodes_[b].grad += g.rightCols(cb);
    });
    return id;
  }

  int concat_rows(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.cols() == B.cols(), "concat_rows: column mismatch");
    const int ra = static_cast<int>(A.rows());
    const int rb = static_cast<int>(B.rows());
    Mat out(A.rows() + B.rows(), A.cols());
    out << A, B;
    int id = push(std::move(out), needs(a) || needs(b), {a, b});
    record(id, [this, id, a, b, ra, rb]() {
      const Mat& g = nodes_[id].grad;
      if (needs(a)) nodes_[a].grad += g.topRows(ra);
      if (needs(b)) nodes_[b].grad += g.bottomRows(rb);
    });
    return id;
  }

  // Row-wise layer normalization with learned gain and offset (row vectors).
  // y = (x - mu) / sigma * gamma + beta, sigma = sqrt(var + eps).
  int layer_norm_rows(int a, int gamma, int beta, double eps = 1e-5) {
    const Mat& X = value(a);
    const Mat& G = value(gamma);
    const Mat& B = value(beta);
    require(G.rows() == 1 && B.rows() == 1 && G.cols() == X.cols() &&
                B.cols() == X.cols(),
            "layer_norm_rows: gain and offset must be 1 x cols(x)");
    const auto n = static_cast<double>(X.cols());
    Mat xhat(X.rows(), X.cols());
    Eigen::VectorXd inv_sigma(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double mu = X.row(r).mean();
      const double var = (X.row(r).array() - mu).square().sum() / n;
      inv_sigma(r) = 1.0 / std::sqrt(var + eps);
      xhat.row(r) = (X.row(r).array() - mu).matrix() * inv_sigma(r);
    }
    Mat out = xhat;
    out.array().rowwise() *= G.row(0).array();
    out.rowwise() += B.row(0);
    int id = push(std::move(out), needs(a) || needs(gamma) || needs(beta),
                  {a, gamma, beta});
    // Keep xhat and 1/sigma alive for the adjoint.
    record(id, [this, id, a, gamma, beta, xhat = std::move(xhat),
                inv_sigma = std::move(inv_sigma), n]() {
      const Mat& g = nodes_[id].grad;
      if (needs(beta)) nodes_[beta].grad += g.colwise().sum();
      if (needs(gamma)) {
        nodes_[gamma].grad += g.cwiseProduct(xhat).colwise().sum();
      }
      if (!needs(a)) return;
      const Mat& G = nodes_[gamma].value;
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        Eigen::RowVectorXd gx = g.row(r).cwiseProduct(G.row(0));
        const double mean_gx = gx.mean();
        const double mean_gx_xhat = gx.dot(xhat.row(r)) / n;
        nodes_[a].grad.row(r) +=
            inv_sigma(r) *
            (gx.array() - mean_gx - xhat.row(r).array() * mean_gx_xhat)
                .matrix();
      }
    });
    return id;
  }

  // Mean over all entries of the squared difference; returns a 1x1 node.
  int mse(int pred, int target) {
    const Mat& P = value(pred);
    const Mat& T = value(target);
    require(P.rows() == T.rows() && P.cols() == T.cols(),
            "mse: shape mismatch");
    const double n = static_cast<double>(P.size());
    Mat out(1, 1);
    out(0, 0) = (P - T).squaredNorm() / n;
    int id = push(std::move(out), needs(pred) || needs(target), {pred, target});
    record(id, [this, id, pred, target, n]() {
      const double g = nodes_[id].grad(0, 0);
      const Mat diff = nodes_[pred].value - nodes_[target].value;
      if (needs(pred)) nodes_[pred].grad += (2.0 * g / n) * diff;
      if (needs(target)) nodes_[target].grad -= (2.0 * g / n) * diff;
    });
    return id;
  }

  // Adds two scalar (1x1) nodes with weights; used to combine losses.
  int axpy_scalar(int a, double wa, int b, double wb) {
    require(value(a).size() == 1 && value(b).size() == 1,
            "axpy_scalar: expects 1x1 nodes");
    Mat out(1, 1);
    out(0, 0) = wa * value(a)(0, 0) + wb * value(b)(0, 0);
    int id = push(std::move(out), needs(a) || needs(b), {a, b});
    record(id, [this, id, a, b, wa, wb]() {
      const double g = nodes_[id].grad(0, 0);
      if (needs(a)) nodes_[a].grad(0, 0) += wa * g;
      if (needs(b)) nodes_[b].grad(0, 0) += wb * g;
    });
    return id;
  }

  // Seeds d(loss)/d(loss) = 1 and replays adjoints newest-first.
  void backward(int loss_id) {
    auto& root = nodes_[check(loss_id)];
    if (root.value.size() != 1) {
      throw NumericalError("tape: backward root must be a 1x1 scalar");
    }
    if (!root.requires_grad) {
      throw NumericalError("tape: backward root does not require gradients");
    }
    root.grad(0, 0) = 1.0;
    for (int i = loss_id; i >= 0; --i) {
      if (nodes_[i].backward) nodes_[i].backward();
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  static void require(bool ok, const char* msg) {
    if (!ok) throw NumericalError(std::string("tape: ") + msg);
  }

  bool needs(int id) const { return nodes_[id].requires_grad; }

  int check(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
      throw NumericalError("tape: node id out of range");
    }
    return id;
  }

  int push(Mat value, bool requires_grad, std::initializer_list<int> parents) {
    for (int p : parents) check(p);
    Node n;
    n.requires_grad = requires_grad;
    if (requires_grad) n.grad = Mat::Zero(value.rows(), value.cols());
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void record(int id, std::function<void()> fn) {
    if (nodes_[id].requires_grad) nodes_[id].backward = std::move(fn);
  }

  std::vector<Node> nodes_;
};

// Named parameter collection with Adam moment slots. Iteration order is
// insertion order, which fixes both the serialized layout and the update
// order, so training is bit-reproducible.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Mat value;
    Mat m;  // Adam first moment
    Mat v;  // Adam second moment
  };

  int add(const std::string& name, Mat init) {
    if (index_.count(name)) {
      throw ConfigError("param store: duplicate parameter '" + name + "'");
    }
    Entry e;
    e.name = name;
    e.m = Mat::Zero(init.rows(), init.cols());
    e.v = Mat::Zero(init.rows(), init.cols());
    e.value = std::move(init);
    index_[name] = static_cast<int>(entries_.size());
    entries_.push_back(std::move(e));
    return static_cast<int>(entries_.size()) - 1;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Mat& value(const std::string& name) { return entries_[at(name)].value; }
  const Mat& value(const std::string& name) const {
    return entries_[at(name)].value;
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
  }

  // Registers every parameter on a tape (insertion order) and returns the
  // node ids aligned with entries().
  std::vector<int> bind(Tape& tape) const {
    std::vector<int> ids;
    ids.reserve(entries_.size());
    for (const auto& e : entries_) ids.push_back(tape.leaf(e.value, true));
    return ids;
  }

 private:
  int at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw ConfigError("param store: unknown parameter '" + name + "'");
    }
    return it->second;
  }

  std::vector<Entry> entries_;
  std::map<std::string, int> index_;
};

// Gradient accumulator aligned with a ParamStore.
struct GradientBuffer {
  std::vector<Mat> grads;

  explicit GradientBuffer(const ParamStore& params) {
    grads.reserve(params.size());
    for (const auto& e : params.entries()) {
      grads.push_back(Mat::Zero(e.value.rows(), e.value.cols()));
    }
  }

  void add_from(const Tape& tape, const std::vector<int>& ids) {
    if (ids.size() != grads.size()) {
      throw NumericalError("gradient buffer: id count mismatch");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      grads[i] += tape.grad(ids[i]);
    }
  }

  void scale(double s) {
    for (auto& g : grads) g *= s;
  }

  void reset() {
    for (auto& g : grads) g.setZero();
  }

  double squared_norm() const {
    double n = 0.0;
    for (const auto& g : grads) n += g.squaredNorm();
    return n;
  }

  bool finite() const {
    for (const auto& g : grads) {
      if (!g.allFinite()) return false;
    }
    return true;
  }
};

}  // namespace inertia::ad
