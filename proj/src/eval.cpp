// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mss/eval.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mss/error.hpp"

namespace mss::eval {
namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Gram matrix of the truncated delayed copies of a and b:
// G[k][l] = sum_{t >= max(k,l)} a[t-k] b[t-l].
// Uses G[k+1][l+1] = G[k][l] - a[n-1-k] b[n-1-l].
Mat delayed_gram(std::span<const double> a, std::span<const double> b, int taps) {
  const std::size_t n = a.size();
  Mat g(taps, taps);
  for (int l = 0; l < taps; ++l) {
    double s = 0;
    for (std::size_t t = static_cast<std::size_t>(l); t < n; ++t) s += a[t] * b[t - l];
    g(0, l) = s;
  }
  for (int k = 1; k < taps; ++k) {
    double s = 0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) s += a[t - k] * b[t];
    g(k, 0) = s;
  }
  const auto at = [n](std::span<const double> x, long idx) {
    return idx >= 0 && static_cast<std::size_t>(idx) < n ? x[static_cast<std::size_t>(idx)] : 0.0;
  };
  const long last = static_cast<long>(n) - 1;
  for (int k = 0; k + 1 < taps; ++k) {
    for (int l = 0; l + 1 < taps; ++l) {
      g(k + 1, l + 1) = g(k, l) - at(a, last - k) * at(b, last - l);
    }
  }
  return g;
}

// c[k] = sum_t x[t] ref[t-k]
Vec delayed_correlation(std::span<const double> x, std::span<const double> ref, int taps) {
  Vec c(taps);
  for (int k = 0; k < taps; ++k) {
    double s = 0;
    for (std::size_t t = static_cast<std::size_t>(k); t < x.size(); ++t) s += x[t] * ref[t - k];
    c(k) = s;
  }
  return c;
}

Vec solve_normal(const Mat& g, const Vec& rhs) {
  Eigen::LLT<Mat> llt(g);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  const double ridge = 1e-10 * std::max(g.diagonal().mean(), std::numeric_limits<double>::min());
  std::clog << "warning: singular projection system, solving with ridge " << ridge << '\n';
  const Mat reg = g + ridge * Mat::Identity(g.rows(), g.cols());
  return reg.ldlt().solve(rhs);
}

// sum_k coef[k] ref[t-k], added into out.
void add_filtered(std::span<const double> ref, const double* coef, int taps,
                  std::vector<double>& out) {
  for (int k = 0; k < taps; ++k) {
    const double c = coef[k];
    if (c == 0.0) continue;
    for (std::size_t t = static_cast<std::size_t>(k); t < out.size(); ++t) out[t] += c * ref[t - k];
  }
}

double energy(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return s;
}

// Residual energies this far below the target are solver round-off; such
// estimates count as perfect.
constexpr double kPerfectFloor = 1e-18;

double ratio_db(double num, double den) {
  if (den <= kPerfectFloor * num) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

}  // namespace

Decomposition decompose(std::span<const double> estimate,
                        std::span<const std::vector<double>> references, std::size_t j,
                        const EvalConfig& cfg) {
  if (references.empty() || j >= references.size()) {
    throw UsageError("decompose: target index out of range");
  }
  if (cfg.proj_filter_len < 1) throw UsageError("decompose: proj_filter_len must be >= 1");
  const std::size_t n = estimate.size();
  for (const auto& r : references) {
    if (r.size() != n) throw DimensionError("decompose: estimate and references differ in length");
  }
  const int taps = static_cast<int>(std::min<std::size_t>(cfg.proj_filter_len, std::max<std::size_t>(n, 1)));
  const int count = static_cast<int>(references.size());

  Mat gram(count * taps, count * taps);
  Vec rhs(count * taps);
  for (int a = 0; a < count; ++a) {
    rhs.segment(a * taps, taps) = delayed_correlation(estimate, references[a], taps);
    for (int b = a; b < count; ++b) {
      const Mat g = delayed_gram(references[a], references[b], taps);
      gram.block(a * taps, b * taps, taps, taps) = g;
      if (b != a) gram.block(b * taps, a * taps, taps, taps) = g.transpose();
    }
  }

  const auto jj = static_cast<Eigen::Index>(j) * taps;
  const Vec target_coef = solve_normal(gram.block(jj, jj, taps, taps), rhs.segment(jj, taps));
  const Vec all_coef = solve_normal(gram, rhs);

  Decomposition d;
  d.s_target.assign(n, 0.0);
  add_filtered(references[j], target_coef.data(), taps, d.s_target);
  std::vector<double> all(n, 0.0);
  for (int a = 0; a < count; ++a) add_filtered(references[a], all_coef.data() + a * taps, taps, all);

  d.e_interf.resize(n);
  d.e_artif.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    d.e_interf[t] = all[t] - d.s_target[t];
    d.e_artif[t] = estimate[t] - all[t];
  }
  return d;
}

Decomposition decompose(const AudioClip& estimate, std::span<const AudioClip> references,
                        std::size_t j, const EvalConfig& cfg) {
  std::vector<std::vector<double>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(r.samples);
  return decompose(estimate.samples, refs, j, cfg);
}

SeparationScore score_decomposition(const Decomposition& d, std::string track_id) {
  SeparationScore s;
  s.track_id = std::move(track_id);
  const double target = energy(d.s_target);
  const double interf = energy(d.e_interf);
  std::vector<double> distortion(d.e_interf.size());
  for (std::size_t t = 0; t < distortion.size(); ++t) distortion[t] = d.e_interf[t] + d.e_artif[t];
  if (target == 0.0) {
    s.sdr = s.sir = -std::numeric_limits<double>::infinity();
    return s;
  }
  s.sdr = ratio_db(target, energy(distortion));
  s.sir = ratio_db(target, interf);
  return s;
}

SeparationScore sdr_sir(const AudioClip& estimate, std::span<const AudioClip> references,
                        std::size_t j, const EvalConfig& cfg, std::string track_id) {
  const bool silent = std::all_of(estimate.samples.begin(), estimate.samples.end(),
                                  [](double v) { return v == 0.0; });
  if (silent) {
    const double ninf = -std::numeric_limits<double>::infinity();
    return {std::move(track_id), ninf, ninf};
  }
  return score_decomposition(decompose(estimate, references, j, cfg), std::move(track_id));
}

double median(std::vector<double> values) {
  if (values.empty()) throw UsageError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

MedianSummary median_report(std::span<const SeparationScore> scores) {
  if (scores.empty()) throw UsageError("median_report: no scores");
  std::vector<double> sdr, sir;
  for (const auto& s : scores) {
    sdr.push_back(s.sdr);
    sir.push_back(s.sir);
  }
  return {median(std::move(sdr)), median(std::move(sir)), scores.size()};
}

namespace {
std::string fmt_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  return out.str();
}

nlohmann::json json_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}
}  // namespace

std::string format_report_text(std::span<const SeparationScore> scores,
                               const MedianSummary& summary, const std::string& label) {
  std::size_t width = std::string("median").size();
  for (const auto& s : scores) width = std::max(width, s.track_id.size());
  std::ostringstream out;
  out << "# " << label << " (per-track SDR/SIR in dB)\n";
  out << std::left << std::setw(static_cast<int>(width)) << "track" << std::right
      << std::setw(10) << "SDR" << std::setw(10) << "SIR" << '\n';
  for (const auto& s : scores) {
    out << std::left << std::setw(static_cast<int>(width)) << s.track_id << std::right
        << std::setw(10) << fmt_db(s.sdr) << std::setw(10) << fmt_db(s.sir) << '\n';
  }
  out << std::left << std::setw(static_cast<int>(width)) << "median" << std::right
      << std::setw(10) << fmt_db(summary.sdr) << std::setw(10) << fmt_db(summary.sir) << '\n';
  return out.str();
}

std::string format_report_json(std::span<const SeparationScore> scores,
                               const MedianSummary& summary, const std::string& label,
                               const std::string& config_text) {
  nlohmann::json doc;
  doc["label"] = label;
  doc["config"] = config_text;
  doc["aggregation"] = "per-track median";
  doc["tracks"] = nlohmann::json::array();
  for (const auto& s : scores) {
    doc["tracks"].push_back({{"track_id", s.track_id}, {"sdr", json_db(s.sdr)}, {"sir", json_db(s.sir)}});
  }
  doc["summary"] = {{"tracks", summary.tracks},
                    {"median_sdr", json_db(summary.sdr)},
                    {"median_sir", json_db(summary.sir)}};
  return doc.dump(2) + "\n";
}

}  // namespace mss::eval
