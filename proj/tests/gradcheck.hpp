// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Central finite differences used as the independent oracle for every
// reverse-mode gradient in the test suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mss/nn.hpp"

namespace mss::testing {

using Objective = std::function<nn::Tensor(nn::Tape&)>;

struct GradCheck {
  double max_rel_error = 0;
  std::string worst;  // "param[index]"
  double worst_analytic = 0, worst_numeric = 0;
  std::size_t checked = 0;
};

// Relative error with a floor on the denominator so entries whose true
// gradient is ~0 are compared absolutely.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double evaluate(const Objective& f) {
  nn::Tape tape(false);
  return f(tape).item();
}

// Compares d f / d p from the tape against central differences for every
// entry of every parameter.
inline GradCheck check_gradients(const Objective& f, const std::vector<nn::Parameter*>& params,
                                 double h = 1e-5) {
  for (nn::Parameter* p : params) p->zero_grad();
  double scale = 1.0;
  {
    nn::Tape tape;
    const nn::Tensor root = f(tape);
    scale = std::max(1.0, std::abs(root.item()));
    tape.backward(root);
  }
  // Cancellation noise in the difference quotient grows with |f|.
  const double floor = 1e-6 * scale;
  GradCheck out;
  for (nn::Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + h;
      const double up = evaluate(f);
      x = saved - h;
      const double down = evaluate(f);
      x = saved;
      const double numeric = (up - down) / (2 * h);
      const double err = rel_error(p->grad.data()[i], numeric, floor);
      ++out.checked;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = p->name + "[" + std::to_string(i) + "]";
        out.worst_analytic = p->grad.data()[i];
        out.worst_numeric = numeric;
      }
    }
  }
  return out;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

inline void randomize(nn::GruParams& p, std::mt19937_64& rng, double scale = 0.5) {
  for (nn::Parameter* q : p.parameters()) q->value = random_matrix(q->value.rows(), q->value.cols(), rng, -scale, scale);
}

}  // namespace mss::testing
