// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "mss/error.hpp"
#include "mss/eval.hpp"

using namespace mss;
using namespace mss::eval;

namespace {

std::vector<double> noise(std::size_t n, std::mt19937_64& rng, std::size_t from = 0,
                          std::size_t to = std::numeric_limits<std::size_t>::max()) {
  std::normal_distribution<double> d(0, 1);
  std::vector<double> x(n, 0.0);
  for (std::size_t i = from; i < std::min(n, to); ++i) x[i] = d(rng);
  return x;
}

std::vector<double> delayed(const std::vector<double>& x, std::size_t d) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = d; t < x.size(); ++t) y[t] = x[t - d];
  return y;
}

double energy(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return s;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0;
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(num / std::max(energy(b), 1e-300));
}

// Least squares against an explicitly built delay matrix.
std::vector<double> brute_projection(const std::vector<double>& x,
                                     const std::vector<std::vector<double>>& refs, int taps) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(refs.size()) * taps);
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (int k = 0; k < taps; ++k) {
      for (Eigen::Index t = k; t < n; ++t) a(t, static_cast<Eigen::Index>(r) * taps + k) = refs[r][t - k];
    }
  }
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  const Eigen::VectorXd fit = a * a.colPivHouseholderQr().solve(b);
  return {fit.data(), fit.data() + n};
}

std::vector<double> plus(const std::vector<double>& a, const std::vector<double>& b, double ca = 1,
                         double cb = 1) {
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = ca * a[i] + cb * b[i];
  return y;
}

}  // namespace

TEST_CASE("projections match an explicit least-squares solve") {
  std::mt19937_64 rng(1);
  const EvalConfig cfg{8, true};
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<std::vector<double>> refs{noise(200, rng), noise(200, rng), noise(200, rng)};
    const auto est = noise(200, rng);
    const Decomposition d = decompose(est, refs, 1, cfg);
    const auto target = brute_projection(est, {refs[1]}, 8);
    const auto all = brute_projection(est, refs, 8);
    CHECK(rel_diff(d.s_target, target) < 1e-9);
    CHECK(rel_diff(plus(d.s_target, d.e_interf), all) < 1e-9);
    for (std::size_t t = 0; t < est.size(); ++t) {
      CHECK(d.s_target[t] + d.e_interf[t] + d.e_artif[t] == doctest::Approx(est[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("self projection and orthogonal references") {
  std::mt19937_64 rng(2);
  const EvalConfig cfg;
  const std::size_t n = 4000;
  // Disjoint supports separated by more than the filter length.
  const std::vector<std::vector<double>> refs{noise(n, rng, 0, 1000), noise(n, rng, 2000, 3000)};

  const Decomposition self = decompose(refs[0], refs, 0, cfg);
  CHECK(rel_diff(self.s_target, refs[0]) < 1e-9);
  CHECK(std::sqrt(energy(self.e_interf) / energy(refs[0])) < 1e-9);
  CHECK(std::sqrt(energy(self.e_artif) / energy(refs[0])) < 1e-9);
  const AudioClip ref0{refs[0]};
  const std::vector<AudioClip> clips{AudioClip{refs[0]}, AudioClip{refs[1]}};
  const SeparationScore perfect = sdr_sir(ref0, clips, 0, cfg);
  CHECK(perfect.sdr == std::numeric_limits<double>::infinity());
  CHECK(perfect.sir == std::numeric_limits<double>::infinity());
  std::vector<double> louder = refs[0];
  for (double& v : louder) v *= 2.5;
  CHECK(sdr_sir(AudioClip{louder}, clips, 0, cfg).sdr == std::numeric_limits<double>::infinity());

  const Decomposition other = decompose(refs[1], refs, 0, cfg);
  CHECK(std::sqrt(energy(other.s_target) / energy(refs[1])) < 1e-9);
  CHECK(rel_diff(other.e_interf, refs[1]) < 1e-9);
}

TEST_CASE("delayed split is recovered") {
  std::mt19937_64 rng(3);
  const EvalConfig cfg;
  const std::size_t n = 5000;
  const std::vector<std::vector<double>> refs{noise(n, rng, 0, 1500), noise(n, rng, 2500, 4000)};
  for (std::size_t delay : {std::size_t{0}, std::size_t{1}, std::size_t{37}, std::size_t{511}}) {
    const auto part_j = delayed(refs[0], delay);
    const auto part_k = delayed(refs[1], 511 - delay);
    const auto est = plus(part_j, part_k, 0.5, 0.5);
    const Decomposition d = decompose(est, refs, 0, cfg);
    CHECK(rel_diff(d.s_target, plus(part_j, part_j, 0.5, 0.0)) < 1e-6);
    CHECK(rel_diff(d.e_interf, plus(part_k, part_k, 0.5, 0.0)) < 1e-6);
    CHECK(std::sqrt(energy(d.e_artif) / energy(est)) < 1e-6);
  }
}

TEST_CASE("equal-power interference gives 0 dB SIR") {
  std::mt19937_64 rng(4);
  const std::size_t n = 6000;
  auto a = noise(n, rng, 0, 2000);
  auto b = noise(n, rng, 3000, 5000);
  const double scale = std::sqrt(energy(a) / energy(b));
  for (double& v : b) v *= scale;
  const std::vector<AudioClip> refs{AudioClip{a}, AudioClip{b}};
  const SeparationScore s = sdr_sir(AudioClip{plus(a, b)}, refs, 0, EvalConfig{});
  CHECK(std::abs(s.sir) < 0.01);
  CHECK(std::abs(s.sdr) < 0.01);
}

TEST_CASE("metric properties on noisy estimates") {
  std::mt19937_64 rng(5);
  const EvalConfig cfg{64, true};
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3000;
    const std::vector<std::vector<double>> refs{noise(n, rng), noise(n, rng)};
    const auto est = plus(plus(refs[0], refs[1], 1.0, 0.3), noise(n, rng), 1.0, 0.2);
    const std::vector<AudioClip> clips{AudioClip{refs[0]}, AudioClip{refs[1]}};

    const Decomposition d = decompose(est, refs, 0, cfg);
    const double parts = energy(d.s_target) + energy(d.e_interf) + energy(d.e_artif);
    CHECK(parts == doctest::Approx(energy(est)).epsilon(1e-6));

    const SeparationScore s = score_decomposition(d);
    CHECK(s.sdr <= s.sir);
    for (double c : {0.01, 3.7, 1000.0}) {
      std::vector<double> scaled = est;
      for (double& v : scaled) v *= c;
      const SeparationScore sc = sdr_sir(AudioClip{scaled}, clips, 0, cfg);
      CHECK(std::abs(sc.sdr - s.sdr) < 1e-9);
      CHECK(std::abs(sc.sir - s.sir) < 1e-9);
    }

    const Decomposition again = decompose(d.s_target, refs, 0, cfg);
    CHECK(rel_diff(again.s_target, d.s_target) < 1e-8);
  }
}

TEST_CASE("degenerate inputs") {
  std::mt19937_64 rng(6);
  const std::vector<AudioClip> refs{AudioClip{noise(800, rng)}, AudioClip{noise(800, rng)}};
  const SeparationScore silent = sdr_sir(AudioClip{std::vector<double>(800, 0.0)}, refs, 0, EvalConfig{});
  CHECK(silent.sdr == -std::numeric_limits<double>::infinity());
  CHECK(silent.sir == -std::numeric_limits<double>::infinity());

  Decomposition exact{{1.0, 2.0}, {0.0, 0.0}, {0.0, 0.0}};
  CHECK(score_decomposition(exact).sdr == std::numeric_limits<double>::infinity());

  // Duplicate references make the joint system singular.
  const std::vector<AudioClip> dup{refs[0], refs[0]};
  const SeparationScore reg = sdr_sir(refs[0], dup, 0, EvalConfig{16, true});
  CHECK(reg.sdr > 100);
  CHECK(reg.sir > 100);

  CHECK_THROWS_AS(sdr_sir(AudioClip{std::vector<double>(799, 1.0)}, refs, 0, EvalConfig{}), DimensionError);
  CHECK_THROWS_AS(sdr_sir(refs[0], refs, 2, EvalConfig{}), UsageError);
}

TEST_CASE("median aggregation and reports") {
  CHECK(median({1, 2, 9}) == 2.0);
  CHECK(median({3, 1}) == 2.0);
  CHECK_THROWS_AS(median({}), UsageError);
  CHECK_THROWS_AS(median_report({}), UsageError);

  const std::vector<SeparationScore> scores{{"a", 1.0, 4.0}, {"b", 9.0, std::numeric_limits<double>::infinity()},
                                            {"c", 2.0, 5.0}};
  const MedianSummary m = median_report(scores);
  CHECK(m.sdr == 2.0);
  CHECK(m.sir == 5.0);
  CHECK(m.tracks == 3);

  const std::string text = format_report_text(scores, m, "demo");
  CHECK(text.find("median") != std::string::npos);
  CHECK(text.find("inf") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);

  const auto doc = nlohmann::json::parse(format_report_json(scores, m, "demo", "profile = desk\n"));
  CHECK(doc["tracks"].size() == 3);
  CHECK(doc["tracks"][1]["sir"] == "inf");
  CHECK(doc["summary"]["median_sdr"] == 2.0);
  CHECK(doc["aggregation"] == "per-track median");
}
