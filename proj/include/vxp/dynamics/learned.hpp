#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "vxp/dynamics/mlp.hpp"
#include "vxp/dynamics/push.hpp"
#include "vxp/sim/world.hpp"

namespace vxp::dynamics {

struct Transition {
  std::vector<double> o, a, next;
};

/// Append-only (o, a, o') store. Past capacity the oldest records go first.
class TransitionBuffer {
 public:
  explicit TransitionBuffer(std::size_t capacity = 100000) : capacity_(capacity) {}

  void add(Transition t) {
    if (t.o.empty() || t.next.size() != t.o.size()) fail(ErrorKind::invalid_input, "transition observation dims differ");
    if (!items_.empty() && (t.o.size() != items_[0].o.size() || t.a.size() != items_[0].a.size()))
      fail(ErrorKind::invalid_input, "transition dims do not match the buffer");
    if (capacity_ == 0) return;
    if (items_.size() == capacity_) items_.erase(items_.begin());
    items_.push_back(std::move(t));
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  const std::vector<Transition>& items() const { return items_; }

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
};

/// Observation-space model o' = o + L x + s * net(x) with x the normalized
/// [o, a]. L is a ridge fit refreshed before each training run, so the network
/// only carries the nonlinear part. Both start at zero, which makes an
/// untrained model predict no change.
class LearnedModel {
 public:
  LearnedModel() = default;
  LearnedModel(int obs_dim, int act_dim, std::uint64_t seed, std::vector<int> hidden = {64, 64})
      : obs_dim_(obs_dim), act_dim_(act_dim) {
    std::vector<int> sizes{obs_dim + act_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(obs_dim);
    net_ = Mlp(sizes, seed, true);
    in_mean_ = VectorXd::Zero(obs_dim + act_dim);
    in_scale_ = VectorXd::Ones(obs_dim + act_dim);
    out_scale_ = VectorXd::Ones(obs_dim);
    linear_ = MatrixXd::Zero(obs_dim + act_dim + 1, obs_dim);
  }

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }

  /// One row per sample.
  MatrixXd predict_batch(const MatrixXd& o, const MatrixXd& a) const {
    if (o.cols() != obs_dim_ || a.cols() != act_dim_ || o.rows() != a.rows())
      fail(ErrorKind::invalid_input, "LearnedModel: observation or action dimension mismatch");
    MatrixXd x(o.rows(), obs_dim_ + act_dim_);
    x << o, a;
    const MatrixXd xn = normalize_input(x);
    const MatrixXd d = net_.forward(xn);
    return o + with_bias(xn) * linear_ + (d.array().rowwise() * out_scale_.transpose().array()).matrix();
  }

  std::vector<double> predict(const std::vector<double>& o, const std::vector<double>& a) const {
    const MatrixXd r = predict_batch(row(o), row(a));
    return {r.data(), r.data() + r.size()};
  }

  /// Recomputes normalization from the buffer, then trains until the loss
  /// stops improving or `max_steps` is hit. Returns the final loss.
  double fit(const TransitionBuffer& buf, int max_steps = 3000, double lr = 1e-3) {
    if (buf.empty()) fail(ErrorKind::invalid_input, "cannot fit on an empty buffer");
    const int n = static_cast<int>(buf.size());
    MatrixXd x(n, obs_dim_ + act_dim_), d(n, obs_dim_);
    for (int i = 0; i < n; ++i) {
      const auto& t = buf[static_cast<std::size_t>(i)];
      for (int j = 0; j < obs_dim_; ++j) x(i, j) = t.o[j];
      for (int j = 0; j < act_dim_; ++j) x(i, obs_dim_ + j) = t.a[j];
      for (int j = 0; j < obs_dim_; ++j) d(i, j) = t.next[j] - t.o[j];
    }
    in_mean_ = x.colwise().mean().transpose();
    for (int j = 0; j < x.cols(); ++j) {
      const double sd = std::sqrt((x.col(j).array() - in_mean_(j)).square().mean());
      in_scale_(j) = sd > 1e-6 ? sd : 1.0;
    }
    const MatrixXd xn = normalize_input(x);
    const MatrixXd xb = with_bias(xn);
    MatrixXd gram = xb.transpose() * xb;
    gram.diagonal().array() += kRidge * n;
    linear_ = gram.ldlt().solve(xb.transpose() * d);
    const MatrixXd r = d - xb * linear_;
    for (int j = 0; j < obs_dim_; ++j) {
      const double rms = std::sqrt(r.col(j).array().square().mean());
      out_scale_(j) = rms > 1e-6 ? rms : 1.0;
    }
    const MatrixXd yn = (r.array().rowwise() / out_scale_.transpose().array()).matrix();
    Optimizer opt;
    double loss = net_.loss_and_gradient(xn, yn, nullptr);
    double best = loss;
    int since_best = 0;
    for (int step = 0; step < max_steps; ++step) {
      try {
        loss = train_step(net_, xn, yn, lr, opt);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::divergence || lr < 1e-7) throw;
        lr *= 0.5;
        opt = Optimizer{};
        continue;
      }
      if (loss < best * (1.0 - 1e-4)) {
        best = loss;
        since_best = 0;
      } else if (++since_best > 200) {
        break;
      }
    }
    return loss;
  }

  /// Normalization statistics, for checkpoints.
  std::vector<double> statistics() const {
    std::vector<double> s{static_cast<double>(obs_dim_), static_cast<double>(act_dim_)};
    for (const VectorXd* v : {&in_mean_, &in_scale_, &out_scale_}) s.insert(s.end(), v->data(), v->data() + v->size());
    s.insert(s.end(), linear_.data(), linear_.data() + linear_.size());
    return s;
  }

  void save(const std::string& path) const { save_checkpoint(path, net_, statistics()); }

  static LearnedModel load(const std::string& path) {
    std::vector<double> st;
    LearnedModel m;
    m.net_ = load_checkpoint(path, &st);
    if (st.size() < 2) fail(ErrorKind::io, "checkpoint has no normalization trailer");
    m.obs_dim_ = static_cast<int>(st[0]);
    m.act_dim_ = static_cast<int>(st[1]);
    const int in = m.obs_dim_ + m.act_dim_;
    if (st.size() != static_cast<std::size_t>(2 + 2 * in + m.obs_dim_ + (in + 1) * m.obs_dim_) || m.net_.input_dim() != in ||
        m.net_.output_dim() != m.obs_dim_)
      fail(ErrorKind::io, "checkpoint trailer does not match the network");
    m.in_mean_ = Eigen::Map<const VectorXd>(st.data() + 2, in);
    m.in_scale_ = Eigen::Map<const VectorXd>(st.data() + 2 + in, in);
    m.out_scale_ = Eigen::Map<const VectorXd>(st.data() + 2 + 2 * in, m.obs_dim_);
    m.linear_ = Eigen::Map<const MatrixXd>(st.data() + 2 + 2 * in + m.obs_dim_, in + 1, m.obs_dim_);
    return m;
  }

  bool operator==(const LearnedModel& o) const {
    return net_ == o.net_ && statistics() == o.statistics();
  }

 private:
  int obs_dim_ = 0, act_dim_ = 0;
  Mlp net_;
  VectorXd in_mean_, in_scale_, out_scale_;
  MatrixXd linear_;
  static constexpr double kRidge = 1e-6;

  static MatrixXd with_bias(const MatrixXd& x) {
    MatrixXd b(x.rows(), x.cols() + 1);
    b << x, MatrixXd::Ones(x.rows(), 1);
    return b;
  }

  MatrixXd normalize_input(const MatrixXd& x) const {
    return ((x.rowwise() - in_mean_.transpose()).array().rowwise() / in_scale_.transpose().array()).matrix();
  }

  static MatrixXd row(const std::vector<double>& v) {
    MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
    return m;
  }
};

/// Zero-shot trajectory plus the exploration noise around it.
struct ExplorationPrior {
  std::vector<sim::Waypoint> base;
  /// Per-axis position noise, meters.
  double sigma = 0.01;
};

/// The prior's waypoint at `step` (the last one past the end) with
/// N(0, sigma²) added to each position axis.
inline sim::Waypoint sample_action_with_prior(const ExplorationPrior& prior, std::size_t step, std::uint64_t seed) {
  if (prior.base.empty()) fail(ErrorKind::invalid_input, "exploration prior has no waypoints");
  if (!(prior.sigma >= 0.0)) fail(ErrorKind::invalid_input, "exploration noise must be non-negative");
  sim::Waypoint w = prior.base[std::min(step, prior.base.size() - 1)];
  if (prior.sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, prior.sigma);
    w.position.x += n(rng);
    w.position.y += n(rng);
    w.position.z += n(rng);
  }
  return w;
}

}  // namespace vxp::dynamics
