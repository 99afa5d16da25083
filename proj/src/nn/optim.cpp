// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <Eigen/QR>
#include <cmath>

#include "mss/error.hpp"
#include "mss/nn.hpp"

namespace mss::nn {

Matrix init_glorot_normal(int rows, int cols, Rng& rng) {
  if (rows <= 0 || cols <= 0) throw UsageError("init_glorot_normal: dimensions must be positive");
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (rows + cols)));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix init_orthogonal(int rows, int cols, Rng& rng) {
  if (rows <= 0 || cols <= 0) throw UsageError("init_orthogonal: dimensions must be positive");
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Sign fix makes the result uniformly distributed (Haar).
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (int k = 0; k < small; ++k) {
    if (r(k, k) < 0) q.col(k) *= -1.0;
  }
  if (rows >= cols) return q;
  return q.transpose();
}

double global_grad_norm(std::span<Parameter* const> params) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (!(norm > max_norm)) return 1.0;
  const double factor = max_norm / norm;
  for (Parameter* p : params) p->grad *= factor;
  return factor;
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) p->zero_grad();
    if (p->adam_m.size() != p->value.size()) {
      p->adam_m = Matrix::Zero(p->value.rows(), p->value.cols());
      p->adam_v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    p->adam_m = cfg.beta1 * p->adam_m + (1.0 - cfg.beta1) * p->grad;
    p->adam_v = cfg.beta2 * p->adam_v + (1.0 - cfg.beta2) * p->grad.cwiseAbs2();
    p->value.array() -= cfg.learning_rate * (p->adam_m.array() / bc1) /
                        ((p->adam_v.array() / bc2).sqrt() + cfg.epsilon);
    p->grad.setZero();
  }
}

}  // namespace mss::nn
