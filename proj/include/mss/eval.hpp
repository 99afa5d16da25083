// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Projection-based SDR/SIR in the style of the BSS Eval toolbox: the
// estimate is projected onto time-delayed copies of the references.

#include <span>
#include <string>
#include <vector>

#include "mss/config.hpp"
#include "mss/wav.hpp"

namespace mss::eval {

struct Decomposition {
  std::vector<double> s_target;
  std::vector<double> e_interf;
  std::vector<double> e_artif;
};

// s_target: projection onto delays 0..proj_filter_len-1 of reference j.
// e_interf: projection onto the delays of all references, minus s_target.
// e_artif: the remainder. Delayed copies are zero-filled at the start and
// truncated to the estimate length, so the three parts are orthogonal.
Decomposition decompose(std::span<const double> estimate,
                        std::span<const std::vector<double>> references, std::size_t j,
                        const EvalConfig& cfg);
Decomposition decompose(const AudioClip& estimate, std::span<const AudioClip> references,
                        std::size_t j, const EvalConfig& cfg);

struct SeparationScore {
  std::string track_id;
  double sdr = 0;  // dB; +inf for perfect, -inf for a silent estimate
  double sir = 0;
};

SeparationScore sdr_sir(const AudioClip& estimate, std::span<const AudioClip> references,
                        std::size_t j, const EvalConfig& cfg, std::string track_id = {});
SeparationScore score_decomposition(const Decomposition& d, std::string track_id = {});

struct MedianSummary {
  double sdr = 0;
  double sir = 0;
  std::size_t tracks = 0;
};

double median(std::vector<double> values);
// Per-track medians; throws UsageError on an empty list.
MedianSummary median_report(std::span<const SeparationScore> scores);

// Aligned table with one row per track and a final median row.
std::string format_report_text(std::span<const SeparationScore> scores,
                               const MedianSummary& summary, const std::string& label);
// {"label", "config", "aggregation": "per-track median", "tracks": [...],
//  "summary": {...}}; non-finite values are written as "inf" / "-inf".
std::string format_report_json(std::span<const SeparationScore> scores,
                               const MedianSummary& summary, const std::string& label,
                               const std::string& config_text);

}  // namespace mss::eval
