// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <string>

#include "mss/error.hpp"
#include "mss/nn.hpp"

namespace mss::nn {

Parameter::Parameter(std::string n, Matrix init)
    : name(std::move(n)),
      value(std::move(init)),
      grad(Matrix::Zero(value.rows(), value.cols())),
      adam_m(Matrix::Zero(value.rows(), value.cols())),
      adam_v(Matrix::Zero(value.rows(), value.cols())) {}

void Parameter::zero_grad() {
  if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
    grad.resize(value.rows(), value.cols());
  }
  grad.setZero();
}

const Matrix& Tensor::value() const {
  if (tape_ == nullptr) throw UsageError("use of an empty Tensor handle");
  return tape_->value(*this);
}

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw UsageError("item() on a non-scalar tensor");
  return v(0, 0);
}

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

const Tape::Node& Tape::node(const Tensor& t) const {
  if (t.tape_ != this || t.id_ < 0 || static_cast<std::size_t>(t.id_) >= nodes_.size()) {
    throw UsageError("tensor does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(t.id_)];
}

const Matrix& Tape::value(const Tensor& t) const { return node(t).value; }

bool Tape::requires_grad(const Tensor& t) const { return node(t).requires_grad; }

Tensor Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tensor Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = recording_;
  return push(std::move(n));
}

Tensor Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Tensor(this, it->second);
  Node n;
  n.value = p.value;
  n.requires_grad = recording_;
  n.param = &p;
  Tensor t = push(std::move(n));
  param_nodes_.emplace(&p, t.id_);
  return t;
}

Tensor Tape::record(Matrix value, std::initializer_list<Tensor> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (recording_) {
    for (const Tensor& in : inputs) {
      if (node(in).requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(t.id_)];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw DimensionError("gradient shape does not match node value");
  }
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

void Tape::backward(const Tensor& root) {
  const Node& r = node(root);
  if (r.value.size() != 1) throw UsageError("backward() requires a scalar (1x1) root");
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  if (!r.requires_grad) return;
  accumulate(root, Matrix::Ones(1, 1));
  for (int id = root.id_; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
      p.grad += n.grad;
    }
  }
}

Matrix Tape::grad(const Tensor& t) const {
  const Node& n = node(t);
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

}  // namespace mss::nn
