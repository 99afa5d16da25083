// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <string>

#include "mss/error.hpp"
#include "mss/nn.hpp"

namespace mss::nn {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Tape& same_tape(const Tensor& a, const Tensor& b) {
  if (&a.tape() != &b.tape()) throw UsageError("tensors live on different tapes");
  return a.tape();
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

double sigmoid_scalar(double x) {
  // Split on sign to avoid overflow in exp.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + shape(av) + " * " + shape(bv));
  }
  return tape.record(av * bv, {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  return tape.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tensor add_bias(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  const Matrix& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != a.cols()) {
    throw DimensionError("add_bias: bias " + shape(bv) + " does not fit " + shape(a.value()));
  }
  Matrix out = a.value().rowwise() + bv.row(0);
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("hadamard", a.value(), b.value());
  return tape.record(a.value().cwiseProduct(b.value()), {a, b},
                     [a, b](Tape& t, const Matrix& g) {
                       if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
                       if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  return tape.record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, -g);
  });
}

Tensor scale(const Tensor& a, double c) {
  return a.tape().record(a.value() * c, {a},
                         [a, c](Tape& t, const Matrix& g) { t.accumulate(a, g * c); });
}

Tensor add_scalar(const Tensor& a, double c) {
  Matrix out = a.value().array() + c;
  return a.tape().record(std::move(out), {a},
                         [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = a.value().unaryExpr(&sigmoid_scalar);
  return a.tape().record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix())));
  });
}

Tensor tanh(const Tensor& a) {
  Matrix out = a.value().array().tanh();
  return a.tape().record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((1.0 - out.array().square()).matrix()));
  });
}

Tensor relu(const Tensor& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
  });
}

Tensor log_eps(const Tensor& a, double eps) {
  Matrix out = (a.value().array() + eps).log();
  return a.tape().record(std::move(out), {a}, [a, eps](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() / (a.value().array() + eps)).matrix());
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row counts differ " + shape(a.value()) + " | " +
                         shape(b.value()));
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.leftCols(a.cols()));
    if (t.requires_grad(b)) t.accumulate(b, g.rightCols(b.cols()));
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index from, Eigen::Index to) {
  if (from < 0 || to > a.rows() || from > to) {
    throw DimensionError("slice_rows: [" + std::to_string(from) + ", " + std::to_string(to) +
                         ") outside " + shape(a.value()));
  }
  Matrix out = a.value().middleRows(from, to - from);
  return a.tape().record(std::move(out), {a}, [a, from](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleRows(from, g.rows()) = g;
    t.accumulate(a, full);
  });
}

Tensor reverse_rows(const Tensor& a) {
  Matrix out = a.value().colwise().reverse();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.colwise().reverse());
  });
}

Tensor sum_all(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Tensor sum_squares(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, 2.0 * g(0, 0) * a.value());
  });
}

Tensor diag_abs_sum(const Tensor& a) {
  const Eigen::Index n = std::min(a.rows(), a.cols());
  Matrix out(1, 1);
  out(0, 0) = a.value().diagonal().head(n).cwiseAbs().sum();
  return a.tape().record(std::move(out), {a}, [a, n](Tape& t, const Matrix& g) {
    Matrix d = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = a.value()(i, i);
      d(i, i) = g(0, 0) * static_cast<double>((w > 0) - (w < 0));
    }
    t.accumulate(a, d);
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("mse", a.value(), b.value());
  const Matrix diff = a.value() - b.value();
  const double count = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / count;
  return tape.record(std::move(out), {a, b}, [a, b, diff, count](Tape& t, const Matrix& g) {
    const Matrix da = (2.0 * g(0, 0) / count) * diff;
    t.accumulate(a, da);
    if (t.requires_grad(b)) t.accumulate(b, -da);
  });
}

double gkl_value(const Matrix& target, const Matrix& estimate, double eps) {
  require_same_shape("gkl", target, estimate);
  if ((target.array() < 0).any() || (estimate.array() < 0).any()) {
    throw NumericError("gkl: negative entries are outside the divergence domain");
  }
  const auto a = target.array();
  const auto b = estimate.array();
  return (a * ((a + eps) / (b + eps)).log() - a + b).sum();
}

Tensor gkl(const Matrix& target, const Tensor& estimate, double eps) {
  Matrix out(1, 1);
  out(0, 0) = gkl_value(target, estimate.value(), eps);
  return estimate.tape().record(
      std::move(out), {estimate}, [target, estimate, eps](Tape& t, const Matrix& g) {
        const auto b = estimate.value().array();
        t.accumulate(estimate, (g(0, 0) * (1.0 - target.array() / (b + eps))).matrix());
      });
}

}  // namespace mss::nn
