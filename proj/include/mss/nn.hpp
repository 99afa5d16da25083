// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Reverse-mode differentiation over dense double matrices.
//
// A Tape records every operation applied to the Tensors it created. Calling
// backward() on a 1x1 result walks the records in reverse and adds
// d(root)/d(param) into each reachable Parameter::grad. A Tape created with
// record_gradients = false records values only (inference).

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mss/types.hpp"

namespace mss::nn {

using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::int64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string name, Matrix init);

  void zero_grad();
  Eigen::Index size() const { return value.size(); }
};

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Scalar value of a 1x1 tensor.
  double item() const;

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the gradient of the root w.r.t. the node's output and pushes
  // contributions to the node's inputs via Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const Matrix&)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  // Leaf that never receives a gradient.
  Tensor constant(Matrix value);
  // Leaf whose gradient is kept on the tape (see grad()).
  Tensor variable(Matrix value);
  // Leaf bound to a Parameter. Repeated calls return the same node.
  Tensor param(Parameter& p);

  // Records an op result. `backward` is dropped when no input needs a
  // gradient or the tape is not recording.
  Tensor record(Matrix value, std::initializer_list<Tensor> inputs, BackwardFn backward);

  bool requires_grad(const Tensor& t) const;
  void accumulate(const Tensor& t, const Matrix& g);

  // Root must be 1x1. Clears any previous node gradients first.
  void backward(const Tensor& root);
  // Gradient of the last backward() root w.r.t. t (zeros if unreachable).
  Matrix grad(const Tensor& t) const;

  const Matrix& value(const Tensor& t) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  Tensor push(Node node);
  const Node& node(const Tensor& t) const;

  bool recording_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// --- primitives -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// a (R x C) + b (1 x C) broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
inline constexpr double kLogEpsilon = 1e-12;
// ln(a + eps)
Tensor log_eps(const Tensor& a, double eps = kLogEpsilon);
Tensor concat_cols(const Tensor& a, const Tensor& b);
// Rows [from, to).
Tensor slice_rows(const Tensor& a, Eigen::Index from, Eigen::Index to);
Tensor reverse_rows(const Tensor& a);
Tensor sum_all(const Tensor& a);
// Sum of squared entries (squared Frobenius norm).
Tensor sum_squares(const Tensor& a);
// sum_i |a(i, i)| for i < min(rows, cols).
Tensor diag_abs_sum(const Tensor& a);
// Mean over all entries of (a - b)^2.
Tensor mse(const Tensor& a, const Tensor& b);
// Generalized KL divergence sum(t ln((t+eps)/(e+eps)) - t + e) of a constant
// nonnegative target t against estimate e. Throws on negative entries.
Tensor gkl(const Matrix& target, const Tensor& estimate, double eps);

double gkl_value(const Matrix& target, const Matrix& estimate, double eps);

// --- GRU ------------------------------------------------------------------

// z = s(x Wz + h Uz + bz); r = s(x Wr + h Ur + br);
// c = tanh(x Wh + (r . h) Uh + bh); h' = (1 - z) . h + z . c
struct GruParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Parameter W_z, W_r, W_h;
  Parameter U_z, U_r, U_h;
  Parameter b_z, b_r, b_h;

  GruParams() = default;
  // All-zero weights.
  GruParams(std::string prefix, int input_dim, int hidden_dim);

  // Glorot-normal input matrices, orthogonal recurrent matrices, zero biases.
  static GruParams initialized(std::string prefix, int input_dim, int hidden_dim, Rng& rng);

  std::vector<Parameter*> parameters();
};

// One step on 1 x input_dim / 1 x hidden_dim rows, built from primitives.
Tensor gru_step(const Tensor& x, const Tensor& h_prev, GruParams& p);

// Runs the GRU over the rows of x from h_0 = 0; when reversed the rows are
// consumed last-to-first. Row t of the result is the state produced when
// input row t was consumed. Single fused node with its own BPTT.
Tensor gru_sequence(const Tensor& x, GruParams& p, bool reversed);

// --- initialization and optimization --------------------------------------

Matrix init_orthogonal(int rows, int cols, Rng& rng);
// N(0, 2 / (rows + cols)) entries.
Matrix init_glorot_normal(int rows, int cols, Rng& rng);

// Rescales all gradients so the global L2 norm is at most max_norm. Returns
// the factor applied (1 when no clipping happened).
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);
double global_grad_norm(std::span<Parameter* const> params);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam update; zeroes the gradients afterwards.
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg);

}  // namespace mss::nn
