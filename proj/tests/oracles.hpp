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

// Reference implementations used only by tests. They are deliberately
// naive and share no code with the library routes they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "cbbench/linalg.hpp"
#include "cbbench/schemes.hpp"

namespace cbbench::schemes {

// Friend of TransformInstance; lets tests force hand-checkable parameters.
struct TransformInstanceAccess {
  static TransformInstance::State& state(TransformInstance& inst) { return inst.state_; }
};

}  // namespace cbbench::schemes

namespace oracle {

struct SweepPoint {
  double threshold, fmr, fnmr;
};

// Every midpoint of the pooled distinct scores plus one sentinel on each
// side, with rates counted by direct loops.
inline std::vector<SweepPoint> sweep(const std::vector<double>& mated,
                                     const std::vector<double>& nonmated) {
  std::set<double> distinct(mated.begin(), mated.end());
  distinct.insert(nonmated.begin(), nonmated.end());
  std::vector<double> v(distinct.begin(), distinct.end());
  std::vector<double> thresholds{v.front() - 1.0};
  for (std::size_t i = 0; i + 1 < v.size(); ++i) thresholds.push_back(v[i] + (v[i + 1] - v[i]) / 2.0);
  thresholds.push_back(v.back() + 1.0);
  std::vector<SweepPoint> out;
  for (double t : thresholds) {
    std::size_t fa = 0, fr = 0;
    for (double s : nonmated) fa += s >= t;
    for (double s : mated) fr += s < t;
    out.push_back({t, double(fa) / double(nonmated.size()), double(fr) / double(mated.size())});
  }
  return out;
}

inline double sweep_eer(const std::vector<SweepPoint>& pts) {
  double best_gap = 2.0, value = 0.0;
  for (const auto& p : pts) {
    const double gap = std::abs(p.fmr - p.fnmr);
    if (gap < best_gap) {
      best_gap = gap;
      value = (p.fmr + p.fnmr) / 2.0;
    }
  }
  return value;
}

inline double sweep_fnmr_at(const std::vector<SweepPoint>& pts, double target) {
  for (const auto& p : pts)
    if (p.fmr <= target) return p.fnmr;
  return 1.0;
}

// Cyclic Jacobi rotations; eigenvalues sorted descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (int sweep_no = 0; sweep_no < 100; ++sweep_no) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Unbiased covariance by explicit sums.
inline std::vector<std::vector<double>> covariance(const cbbench::Matrix& x) {
  const auto n = static_cast<std::size_t>(x.rows()), d = static_cast<std::size_t>(x.cols());
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(long(i), long(j)) / double(n);
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        c[a][b] += (x(long(i), long(a)) - mean[a]) * (x(long(i), long(b)) - mean[b]) / double(n - 1);
  return c;
}

// Classical Gram-Schmidt in long double.
inline std::vector<std::vector<long double>> orthonormalize(const cbbench::Matrix& m) {
  std::vector<std::vector<long double>> q;
  for (long i = 0; i < m.rows(); ++i) {
    std::vector<long double> v(static_cast<std::size_t>(m.cols()));
    for (long j = 0; j < m.cols(); ++j) v[std::size_t(j)] = m(i, j);
    for (const auto& u : q) {
      long double dot = 0;
      for (std::size_t j = 0; j < v.size(); ++j) dot += u[j] * v[j];
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= dot * u[j];
    }
    long double norm = 0;
    for (auto e : v) norm += e * e;
    norm = std::sqrt(norm);
    for (auto& e : v) e /= norm;
    q.push_back(v);
  }
  return q;
}

// Q^T Q for row-orthonormal Q: the projector onto the row space.
inline std::vector<std::vector<long double>> projector(const std::vector<std::vector<long double>>& q,
                                                       std::size_t d) {
  std::vector<std::vector<long double>> p(d, std::vector<long double>(d, 0));
  for (const auto& u : q)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) p[a][b] += u[a] * u[b];
  return p;
}

inline double gaussian_mi(double rho) { return -0.5 * std::log(1.0 - rho * rho); }

}  // namespace oracle
