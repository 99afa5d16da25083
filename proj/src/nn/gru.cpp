// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <memory>
#include <string>

#include "mss/error.hpp"
#include "mss/nn.hpp"

namespace mss::nn {

GruParams::GruParams(std::string prefix, int in, int hidden)
    : input_dim(in),
      hidden_dim(hidden),
      W_z(prefix + ".W_z", Matrix::Zero(in, hidden)),
      W_r(prefix + ".W_r", Matrix::Zero(in, hidden)),
      W_h(prefix + ".W_h", Matrix::Zero(in, hidden)),
      U_z(prefix + ".U_z", Matrix::Zero(hidden, hidden)),
      U_r(prefix + ".U_r", Matrix::Zero(hidden, hidden)),
      U_h(prefix + ".U_h", Matrix::Zero(hidden, hidden)),
      b_z(prefix + ".b_z", Matrix::Zero(1, hidden)),
      b_r(prefix + ".b_r", Matrix::Zero(1, hidden)),
      b_h(prefix + ".b_h", Matrix::Zero(1, hidden)) {
  if (in <= 0 || hidden <= 0) throw UsageError("GRU dimensions must be positive");
}

GruParams GruParams::initialized(std::string prefix, int in, int hidden, Rng& rng) {
  GruParams p(std::move(prefix), in, hidden);
  p.W_z.value = init_glorot_normal(in, hidden, rng);
  p.W_r.value = init_glorot_normal(in, hidden, rng);
  p.W_h.value = init_glorot_normal(in, hidden, rng);
  p.U_z.value = init_orthogonal(hidden, hidden, rng);
  p.U_r.value = init_orthogonal(hidden, hidden, rng);
  p.U_h.value = init_orthogonal(hidden, hidden, rng);
  return p;
}

std::vector<Parameter*> GruParams::parameters() {
  return {&W_z, &W_r, &W_h, &U_z, &U_r, &U_h, &b_z, &b_r, &b_h};
}

Tensor gru_step(const Tensor& x, const Tensor& h_prev, GruParams& p) {
  if (x.rows() != 1 || x.cols() != p.input_dim || h_prev.rows() != 1 ||
      h_prev.cols() != p.hidden_dim) {
    throw DimensionError("gru_step: expected 1x" + std::to_string(p.input_dim) + " input and 1x" +
                         std::to_string(p.hidden_dim) + " state");
  }
  Tape& tape = x.tape();
  const auto affine = [&](const Tensor& in, Parameter& w, const Tensor& h, Parameter& u,
                          Parameter& b) {
    return add_bias(add(matmul(in, tape.param(w)), matmul(h, tape.param(u))), tape.param(b));
  };
  const Tensor z = sigmoid(affine(x, p.W_z, h_prev, p.U_z, p.b_z));
  const Tensor r = sigmoid(affine(x, p.W_r, h_prev, p.U_r, p.b_r));
  const Tensor cand = tanh(affine(x, p.W_h, hadamard(r, h_prev), p.U_h, p.b_h));
  const Tensor keep = add_scalar(scale(z, -1.0), 1.0);
  return add(hadamard(keep, h_prev), hadamard(z, cand));
}

namespace {

double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Values saved by the forward pass, in processing order (step s consumes
// input row order[s]).
struct GruCache {
  Matrix x;       // inputs in processing order
  Matrix h_prev;  // state before each step
  Matrix z, r, cand;
};

}  // namespace

Tensor gru_sequence(const Tensor& x, GruParams& p, bool reversed) {
  if (x.cols() != p.input_dim) {
    throw DimensionError("gru_sequence: input width " + std::to_string(x.cols()) +
                         " != GRU input_dim " + std::to_string(p.input_dim));
  }
  Tape& tape = x.tape();
  const Eigen::Index steps = x.rows();
  const Eigen::Index hid = p.hidden_dim;

  auto cache = std::make_shared<GruCache>();
  cache->x = reversed ? Matrix(x.value().colwise().reverse()) : x.value();
  // Input projections for all steps at once.
  const Matrix xz = (cache->x * p.W_z.value).rowwise() + p.b_z.value.row(0);
  const Matrix xr = (cache->x * p.W_r.value).rowwise() + p.b_r.value.row(0);
  const Matrix xh = (cache->x * p.W_h.value).rowwise() + p.b_h.value.row(0);

  cache->h_prev.resize(steps, hid);
  cache->z.resize(steps, hid);
  cache->r.resize(steps, hid);
  cache->cand.resize(steps, hid);
  Matrix out(steps, hid);

  RowVector h = RowVector::Zero(hid);
  RowVector rh(hid);
  for (Eigen::Index s = 0; s < steps; ++s) {
    cache->h_prev.row(s) = h;
    auto z = cache->z.row(s);
    auto r = cache->r.row(s);
    auto c = cache->cand.row(s);
    z.noalias() = xz.row(s) + h * p.U_z.value;
    r.noalias() = xr.row(s) + h * p.U_r.value;
    z = z.unaryExpr(&sigmoid_scalar);
    r = r.unaryExpr(&sigmoid_scalar);
    rh = r.cwiseProduct(h);
    c.noalias() = xh.row(s) + rh * p.U_h.value;
    c = c.array().tanh().matrix();
    h = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(c);
    out.row(reversed ? steps - 1 - s : s) = h;
  }

  const std::initializer_list<Tensor> inputs = {
      x,
      tape.param(p.W_z), tape.param(p.W_r), tape.param(p.W_h),
      tape.param(p.U_z), tape.param(p.U_r), tape.param(p.U_h),
      tape.param(p.b_z), tape.param(p.b_r), tape.param(p.b_h)};
  std::vector<Tensor> in(inputs);
  const bool want = tape.recording();
  return tape.record(std::move(out), inputs,
                     [in, cache = want ? cache : nullptr, reversed](Tape& t, const Matrix& g) {
    const Tensor& x_in = in[0];
    const Matrix& Uz = in[4].value();
    const Matrix& Ur = in[5].value();
    const Matrix& Uh = in[6].value();
    const Eigen::Index n = cache->x.rows();
    const Eigen::Index hd = Uz.rows();

    Matrix da_z(n, hd), da_r(n, hd), da_h(n, hd);
    RowVector dh = RowVector::Zero(hd);
    RowVector d_rh(hd);
    for (Eigen::Index s = n - 1; s >= 0; --s) {
      dh += g.row(reversed ? n - 1 - s : s);
      const auto z = cache->z.row(s);
      const auto r = cache->r.row(s);
      const auto c = cache->cand.row(s);
      const auto hp = cache->h_prev.row(s);

      const RowVector dz = dh.cwiseProduct(c - hp);
      da_h.row(s) = dh.cwiseProduct(z).cwiseProduct((1.0 - c.array().square()).matrix());
      d_rh.noalias() = da_h.row(s) * Uh.transpose();
      const RowVector dr = d_rh.cwiseProduct(hp);
      da_z.row(s) = dz.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
      da_r.row(s) = dr.cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));

      RowVector next = dh.cwiseProduct((1.0 - z.array()).matrix()) + d_rh.cwiseProduct(r);
      next.noalias() += da_z.row(s) * Uz.transpose();
      next.noalias() += da_r.row(s) * Ur.transpose();
      dh = next;
    }

    const Matrix& xs = cache->x;
    if (t.requires_grad(in[1])) t.accumulate(in[1], xs.transpose() * da_z);
    if (t.requires_grad(in[2])) t.accumulate(in[2], xs.transpose() * da_r);
    if (t.requires_grad(in[3])) t.accumulate(in[3], xs.transpose() * da_h);
    if (t.requires_grad(in[4])) t.accumulate(in[4], cache->h_prev.transpose() * da_z);
    if (t.requires_grad(in[5])) t.accumulate(in[5], cache->h_prev.transpose() * da_r);
    if (t.requires_grad(in[6])) {
      const Matrix rh_all = cache->r.cwiseProduct(cache->h_prev);
      t.accumulate(in[6], rh_all.transpose() * da_h);
    }
    if (t.requires_grad(in[7])) t.accumulate(in[7], da_z.colwise().sum());
    if (t.requires_grad(in[8])) t.accumulate(in[8], da_r.colwise().sum());
    if (t.requires_grad(in[9])) t.accumulate(in[9], da_h.colwise().sum());
    if (t.requires_grad(x_in)) {
      Matrix dx = da_z * in[1].value().transpose();
      dx.noalias() += da_r * in[2].value().transpose();
      dx.noalias() += da_h * in[3].value().transpose();
      if (reversed) dx = dx.colwise().reverse().eval();
      t.accumulate(x_in, dx);
    }
  });
}

}  // namespace mss::nn
