// Copyright 2026 The cbbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Evaluation families: verification performance (DET, EER, FNMR at a
// target FMR), score-based unlinkability, and mutual-information
// irreversibility under a Gaussian approximation of PCA-reduced templates.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbbench/core.hpp"
#include "cbbench/linalg.hpp"
#include "cbbench/protocol.hpp"

namespace cbbench {

// ---------------------------------------------------------------------------
// Recognition performance

struct DetPoint {
  double threshold;
  double fmr;   // fraction of non-mated scores >= threshold
  double fnmr;  // fraction of mated scores < threshold
  friend bool operator==(const DetPoint&, const DetPoint&) = default;
};

/// Points sorted by ascending threshold.
struct DetCurve {
  std::vector<DetPoint> points;
  friend bool operator==(const DetCurve&, const DetCurve&) = default;
};

/// Thresholds are the midpoints between consecutive distinct pooled scores,
/// plus one sentinel below the minimum and one above the maximum.
inline DetCurve compute_det(std::span<const double> mated, std::span<const double> nonmated) {
  if (mated.empty() || nonmated.empty())
    throw std::invalid_argument("compute_det: mated and non-mated scores must be non-empty");
  std::vector<double> m(mated.begin(), mated.end());
  std::vector<double> nm(nonmated.begin(), nonmated.end());
  std::sort(m.begin(), m.end());
  std::sort(nm.begin(), nm.end());
  std::vector<double> pooled;
  pooled.reserve(m.size() + nm.size());
  std::merge(m.begin(), m.end(), nm.begin(), nm.end(), std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
  if (!std::isfinite(pooled.front()) || !std::isfinite(pooled.back()))
    throw std::invalid_argument("compute_det: scores must be finite");

  std::vector<double> thresholds;
  thresholds.reserve(pooled.size() + 1);
  thresholds.push_back(pooled.front() - 1.0);
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i)
    thresholds.push_back(pooled[i] + (pooled[i + 1] - pooled[i]) / 2.0);
  thresholds.push_back(pooled.back() + 1.0);

  const double nm_total = static_cast<double>(nm.size());
  const double m_total = static_cast<double>(m.size());
  DetCurve curve;
  curve.points.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto accepted = nm.end() - std::lower_bound(nm.begin(), nm.end(), t);
    const auto rejected = std::lower_bound(m.begin(), m.end(), t) - m.begin();
    curve.points.push_back({t, static_cast<double>(accepted) / nm_total,
                            static_cast<double>(rejected) / m_total});
  }
  return curve;
}

inline DetCurve compute_det(const ScoreSet& scores) {
  return compute_det(scores.mated, scores.nonmated);
}

/// (fmr + fnmr) / 2 at the first threshold minimizing |fmr - fnmr|.
inline double eer(const DetCurve& curve) {
  if (curve.points.empty()) throw std::invalid_argument("eer: empty curve");
  const DetPoint* best = &curve.points.front();
  for (const DetPoint& p : curve.points)
    if (std::abs(p.fmr - p.fnmr) < std::abs(best->fmr - best->fnmr)) best = &p;
  return (best->fmr + best->fnmr) / 2.0;
}

/// FNMR at the smallest threshold whose FMR does not exceed the target.
inline double fnmr_at_fmr(const DetCurve& curve, double target_fmr) {
  if (!(target_fmr > 0.0 && target_fmr < 1.0))
    throw std::invalid_argument("fnmr_at_fmr: target must lie in (0, 1)");
  for (const DetPoint& p : curve.points)
    if (p.fmr <= target_fmr) return p.fnmr;
  throw std::invalid_argument("fnmr_at_fmr: curve has no point with fmr <= target");
}

// ---------------------------------------------------------------------------
// Unlinkability

struct LocalLinkability {
  double score;  // bin center
  double d;      // clipped local measure in [0, 1]
};

struct UnlinkabilityReport {
  double d_sys = 0.0;
  std::vector<LocalLinkability> local_curve;
  std::size_t bin_count = 0;
  bool degenerate = false;  // all scores equal, no bins to compare
};

inline constexpr std::size_t kDefaultUnlinkabilityBins = 100;

/// Posterior difference between the mated and non-mated hypotheses with
/// equal priors, estimated from equal-width histograms sharing edges over
/// the pooled score range. Local values are clipped at zero; the global
/// value weights them by the mated score mass.
inline UnlinkabilityReport unlinkability(std::span<const double> mated,
                                         std::span<const double> nonmated,
                                         std::size_t bins = kDefaultUnlinkabilityBins) {
  if (bins < 10) throw std::invalid_argument("unlinkability: need at least 10 bins");
  if (mated.empty() || nonmated.empty())
    throw std::invalid_argument("unlinkability: mated and non-mated scores must be non-empty");
  double lo = mated.front();
  double hi = mated.front();
  for (auto list : {mated, nonmated}) {
    for (double s : list) {
      if (!std::isfinite(s)) throw std::invalid_argument("unlinkability: non-finite score");
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  UnlinkabilityReport report;
  report.bin_count = bins;
  if (!(hi > lo)) {
    report.degenerate = true;
    report.local_curve.push_back({lo, 0.0});
    return report;
  }

  const double width = (hi - lo) / static_cast<double>(bins);
  auto bin_of = [&](double s) {
    const auto b = static_cast<std::size_t>((s - lo) / (hi - lo) * static_cast<double>(bins));
    return std::min(b, bins - 1);
  };
  std::vector<double> hist_m(bins, 0.0), hist_nm(bins, 0.0);
  for (double s : mated) hist_m[bin_of(s)] += 1.0;
  for (double s : nonmated) hist_nm[bin_of(s)] += 1.0;

  const double n_m = static_cast<double>(mated.size());
  const double n_nm = static_cast<double>(nonmated.size());
  report.local_curve.reserve(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double pm = hist_m[b] / n_m;
    const double pnm = hist_nm[b] / n_nm;
    const double d = (pm + pnm) > 0.0 ? std::max(0.0, (pm - pnm) / (pm + pnm)) : 0.0;
    report.local_curve.push_back({lo + (static_cast<double>(b) + 0.5) * width, d});
    report.d_sys += pm * d;
  }
  report.d_sys = std::clamp(report.d_sys, 0.0, 1.0);
  return report;
}

/// Only meaningful for scores produced with sample-specific keys.
inline UnlinkabilityReport unlinkability(const ScoreSet& scores,
                                         std::size_t bins = kDefaultUnlinkabilityBins) {
  if (scores.scenario != Scenario::SampleSpecific) {
    throw std::invalid_argument(
        "unlinkability requires scores from the sample-specific scenario, got " +
        std::string(to_string(scores.scenario)));
  }
  return unlinkability(scores.mated, scores.nonmated, bins);
}

// ---------------------------------------------------------------------------
// Irreversibility

struct IrreversibilityReport {
  double mi = 0.0;  // nats
  double h_x = 0.0;
  double h_y = 0.0;
  double h_joint = 0.0;
  std::size_t r_used = 0;
  bool r_shrunk = false;           // r_used < requested r
  bool near_deterministic = false; // joint covariance singular up to the ridge
};

inline constexpr std::size_t kDefaultMiComponents = 100;

/// MI between the row sets x and y: each is PCA-reduced to r_used
/// components, then H(X_r) + H(Y_r) - H(X_r, Y_r) under a Gaussian model.
/// Each block of the joint covariance carries the same ridge as its
/// marginal, which keeps the estimate non-negative and invariant to
/// rescaling either input.
inline IrreversibilityReport mutual_information(const Matrix& x, const Matrix& y,
                                                std::size_t r = kDefaultMiComponents) {
  if (x.rows() != y.rows())
    throw std::invalid_argument("mutual_information: row counts differ");
  if (x.rows() < 3) throw std::invalid_argument("mutual_information: need at least 3 rows");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("mutual_information: non-finite input");
  const Index used = std::min({static_cast<Index>(r), x.rows() - 1, x.cols(), y.cols()});
  if (used < 1) throw std::invalid_argument("mutual_information: r must be >= 1");

  IrreversibilityReport report;
  report.r_used = static_cast<std::size_t>(used);
  report.r_shrunk = report.r_used < r;

  const Matrix xr = pca_transform(pca_fit(x, used), x);
  const Matrix yr = pca_transform(pca_fit(y, used), y);
  Matrix joint(x.rows(), 2 * used);
  joint << xr, yr;

  const Matrix cov_x = covariance(xr);
  const Matrix cov_y = covariance(yr);
  const Matrix cov_joint = covariance(joint);
  const double ridge_x = default_ridge(cov_x);
  const double ridge_y = default_ridge(cov_y);
  Vector ridge_joint(2 * used);
  ridge_joint << Vector::Constant(used, ridge_x), Vector::Constant(used, ridge_y);

  report.h_x = gaussian_entropy(cov_x, ridge_x);
  report.h_y = gaussian_entropy(cov_y, ridge_y);
  report.h_joint = gaussian_entropy(cov_joint, ridge_joint);
  report.mi = report.h_x + report.h_y - report.h_joint;
  if (report.mi < 0.0 && report.mi >= -1e-9) report.mi = 0.0;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov_joint, Eigen::EigenvaluesOnly);
  report.near_deterministic =
      eig.info() == Eigen::Success && eig.eigenvalues()(0) <= std::max(ridge_x, ridge_y);
  return report;
}

/// One row per protected template: bits and filter bits as 0/1, IoM codes
/// as their values.
inline Matrix protected_matrix(std::span<const ProtectedTemplate> templates) {
  if (templates.empty()) throw std::invalid_argument("protected_matrix: no templates");
  const auto width = static_cast<Index>(templates.front().element_count());
  Matrix m(static_cast<Index>(templates.size()), width);
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const auto row = templates[i].to_row();
    if (static_cast<Index>(row.size()) != width)
      throw std::invalid_argument("protected_matrix: templates differ in length");
    for (Index j = 0; j < width; ++j) m(static_cast<Index>(i), j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

inline Matrix protected_matrix(const Dataset& ds, const KeyPolicy& policy,
                               const RunOptions& options = {}) {
  return protected_matrix(protect_dataset(ds, policy, options));
}

}  // namespace cbbench
