#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "vxp/common/error.hpp"

namespace vxp::dynamics {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/// Fully connected network, tanh on hidden layers and identity on the
/// output. Batches are row-major in the sense of one sample per row.
class Mlp {
 public:
  Mlp() = default;

  /// Glorot-uniform hidden layers. The output layer starts at zero when
  /// `zero_output` is set, so an untrained residual model is the identity.
  Mlp(std::vector<int> sizes, std::uint64_t seed, bool zero_output = false) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) fail(ErrorKind::invalid_input, "Mlp needs at least input and output sizes");
    for (int s : sizes_)
      if (s <= 0) fail(ErrorKind::invalid_input, "Mlp layer sizes must be positive");
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double a = std::sqrt(6.0 / (in + out));
      std::uniform_real_distribution<double> u(-a, a);
      MatrixXd w(in, out);
      for (int i = 0; i < in; ++i)
        for (int j = 0; j < out; ++j) w(i, j) = u(rng);
      if (zero_output && l + 2 == sizes_.size()) w.setZero();
      weights_.push_back(std::move(w));
      biases_.push_back(RowVectorXd::Zero(out));
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t layers() const { return weights_.size(); }
  MatrixXd& weight(std::size_t l) { return weights_[l]; }
  RowVectorXd& bias(std::size_t l) { return biases_[l]; }

  MatrixXd forward(const MatrixXd& x) const {
    if (x.cols() != input_dim()) fail(ErrorKind::invalid_input, "Mlp::forward: input width mismatch");
    MatrixXd h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      MatrixXd z = (h * weights_[l]).rowwise() + biases_[l];
      h = l + 1 < weights_.size() ? MatrixXd(z.array().tanh()) : z;
    }
    return h;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  /// Flattened as W0 row-major, b0, W1, b1, ...
  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (int i = 0; i < weights_[l].rows(); ++i)
        for (int j = 0; j < weights_[l].cols(); ++j) p.push_back(weights_[l](i, j));
      for (int j = 0; j < biases_[l].size(); ++j) p.push_back(biases_[l](j));
    }
    return p;
  }

  void set_parameters(const std::vector<double>& p) {
    if (p.size() != parameter_count()) fail(ErrorKind::invalid_input, "Mlp::set_parameters: size mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (int i = 0; i < weights_[l].rows(); ++i)
        for (int j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = p[k++];
      for (int j = 0; j < biases_[l].size(); ++j) biases_[l](j) = p[k++];
    }
  }

  bool finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    return true;
  }

  /// Mean squared error over all outputs and its gradient, flattened in the
  /// same order as parameters().
  double loss_and_gradient(const MatrixXd& x, const MatrixXd& y, std::vector<double>* grad) const {
    if (x.rows() == 0) fail(ErrorKind::invalid_input, "empty batch");
    if (y.rows() != x.rows() || y.cols() != output_dim()) fail(ErrorKind::invalid_input, "target shape mismatch");
    std::vector<MatrixXd> acts{x};
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      MatrixXd z = (acts.back() * weights_[l]).rowwise() + biases_[l];
      acts.push_back(l + 1 < weights_.size() ? MatrixXd(z.array().tanh()) : z);
    }
    const MatrixXd err = acts.back() - y;
    const double scale = 1.0 / static_cast<double>(err.size());
    const double loss = err.squaredNorm() * scale;
    if (!grad) return loss;

    std::vector<MatrixXd> gw(weights_.size());
    std::vector<RowVectorXd> gb(weights_.size());
    MatrixXd delta = err * (2.0 * scale);
    for (std::size_t l = weights_.size(); l-- > 0;) {
      gw[l] = acts[l].transpose() * delta;
      gb[l] = delta.colwise().sum();
      if (l > 0) {
        delta = delta * weights_[l].transpose();
        delta.array() *= 1.0 - acts[l].array().square();
      }
    }
    grad->clear();
    grad->reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (int i = 0; i < gw[l].rows(); ++i)
        for (int j = 0; j < gw[l].cols(); ++j) grad->push_back(gw[l](i, j));
      for (int j = 0; j < gb[l].size(); ++j) grad->push_back(gb[l](j));
    }
    return loss;
  }

  bool operator==(const Mlp& o) const { return sizes_ == o.sizes_ && parameters() == o.parameters(); }

 private:
  std::vector<int> sizes_;
  std::vector<MatrixXd> weights_;
  std::vector<RowVectorXd> biases_;
};

/// Adam moments. Plain gradient descent is the same call with `adam` unset.
struct Optimizer {
  bool adam = true;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  long t = 0;
};

/// One full-batch step on mean squared error; returns the loss after the
/// step. A non-finite loss restores the previous parameters and raises
/// `divergence` so the caller can lower the rate.
inline double train_step(Mlp& model, const MatrixXd& x, const MatrixXd& y, double lr, Optimizer& opt) {
  std::vector<double> g;
  model.loss_and_gradient(x, y, &g);
  std::vector<double> p = model.parameters();
  const std::vector<double> before = p;
  if (opt.adam) {
    if (opt.m.size() != p.size()) {
      opt.m.assign(p.size(), 0.0);
      opt.v.assign(p.size(), 0.0);
      opt.t = 0;
    }
    ++opt.t;
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      opt.m[i] = opt.beta1 * opt.m[i] + (1 - opt.beta1) * g[i];
      opt.v[i] = opt.beta2 * opt.v[i] + (1 - opt.beta2) * g[i] * g[i];
      p[i] -= lr * (opt.m[i] / c1) / (std::sqrt(opt.v[i] / c2) + opt.eps);
    }
  } else {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  }
  model.set_parameters(p);
  const double loss = model.loss_and_gradient(x, y, nullptr);
  if (!std::isfinite(loss) || !model.finite()) {
    model.set_parameters(before);
    fail(ErrorKind::divergence, "training loss became non-finite");
  }
  return loss;
}

inline double train_step(Mlp& model, const MatrixXd& x, const MatrixXd& y, double lr) {
  Optimizer gd;
  gd.adam = false;
  return train_step(model, x, y, lr, gd);
}

// ---------------------------------------------------------------------------
// Flat binary checkpoint: magic, layer count, sizes (int32), then every
// parameter as little-endian float64 in parameters() order, then an optional
// trailer of extra float64 values (normalization statistics).

inline constexpr char kMlpMagic[8] = {'V', 'X', 'P', 'M', 'L', 'P', '1', '\0'};

inline void save_checkpoint(const std::string& path, const Mlp& m, const std::vector<double>& trailer = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot write checkpoint " + path);
  os.write(kMlpMagic, sizeof kMlpMagic);
  const auto put_i = [&](std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
  put_i(static_cast<std::int32_t>(m.sizes().size()));
  for (int s : m.sizes()) put_i(s);
  const auto p = m.parameters();
  os.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  put_i(static_cast<std::int32_t>(trailer.size()));
  os.write(reinterpret_cast<const char*>(trailer.data()), static_cast<std::streamsize>(trailer.size() * sizeof(double)));
  if (!os) fail(ErrorKind::io, "failed writing checkpoint " + path);
}

inline Mlp load_checkpoint(const std::string& path, std::vector<double>* trailer = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot read checkpoint " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMlpMagic, sizeof magic) != 0) fail(ErrorKind::io, "bad checkpoint magic");
  const auto get_i = [&] {
    std::int32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) fail(ErrorKind::io, "truncated checkpoint");
    return v;
  };
  const int n = get_i();
  if (n < 2 || n > 64) fail(ErrorKind::io, "implausible layer count in checkpoint");
  std::vector<int> sizes;
  for (int i = 0; i < n; ++i) sizes.push_back(get_i());
  Mlp m(sizes, 0);
  std::vector<double> p(m.parameter_count());
  is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (!is) fail(ErrorKind::io, "truncated checkpoint parameters");
  m.set_parameters(p);
  const int t = get_i();
  std::vector<double> extra(static_cast<std::size_t>(std::max(0, t)));
  is.read(reinterpret_cast<char*>(extra.data()), static_cast<std::streamsize>(extra.size() * sizeof(double)));
  if (!is) fail(ErrorKind::io, "truncated checkpoint trailer");
  if (trailer) *trailer = std::move(extra);
  return m;
}

}  // namespace vxp::dynamics
