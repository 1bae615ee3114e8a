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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cbbench/random.hpp"

namespace cbbench {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Input is rank deficient where full rank is required.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A factorization failed even after regularization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

/// i.i.d. standard-normal entries, drawn from `stream` in row-major order.
inline Matrix gaussian_matrix(RandomStream& stream, Index rows, Index cols) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("gaussian_matrix: dimensions must be positive, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = stream.gaussian();
  return m;
}

namespace detail {

// Two classical projection sweeps against rows [0, upto) of q ("twice is
// enough"); each sweep is a pair of matrix-vector products.
inline double orthogonalize_row(Matrix& q, Index row, Index upto) {
  if (upto > 0) {
    const auto basis = q.topRows(upto);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector c = basis * q.row(row).transpose();
      q.row(row).noalias() -= c.transpose() * basis;
    }
  }
  return q.row(row).norm();
}

// Replaces rows [from, rows) of q with unit vectors orthogonal to all
// earlier rows, drawn from the standard basis in order.
inline void complete_orthonormal_rows(Matrix& q, Index from) {
  Index basis = 0;
  for (Index i = from; i < q.rows(); ++i) {
    for (;; ++basis) {
      if (basis >= q.cols())
        throw DegenerateInputError("cannot complete orthonormal basis");
      q.row(i).setZero();
      q(i, basis) = 1.0;
      const double n = orthogonalize_row(q, i, i);
      if (n > 1e-6) {
        q.row(i) /= n;
        ++basis;
        break;
      }
    }
  }
}

}  // namespace detail

/// Classical Gram-Schmidt with one re-orthogonalization pass. Returns rows
/// spanning the same space as the input rows, pairwise orthonormal.
inline Matrix gram_schmidt(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1)
    throw std::invalid_argument("gram_schmidt: empty matrix");
  if (m.rows() > m.cols())
    throw std::invalid_argument("gram_schmidt: more rows than columns");
  Matrix q = m;
  for (Index i = 0; i < q.rows(); ++i) {
    const double original = m.row(i).norm();
    const double residual = detail::orthogonalize_row(q, i, i);
    if (!(residual > 1e-12 * std::max(original, 1.0)) || !std::isfinite(residual)) {
      throw DegenerateInputError("gram_schmidt: row " + std::to_string(i) +
                                 " is linearly dependent on earlier rows");
    }
    q.row(i) /= residual;
  }
  return q;
}

struct PcaModel {
  Vector mean;                 // length = input dimension
  Matrix components;           // r x input dimension, orthonormal rows
  Vector explained_variance;   // length r, non-increasing

  Index input_dim() const { return mean.size(); }
  Index rank() const { return components.rows(); }
};

/// Top-r principal directions of the column-centered data. Uses a thin SVD
/// of the centered data when rows >= cols and the eigendecomposition of the
/// Gram matrix otherwise. Each component is sign-normalized so its largest
/// magnitude entry is positive.
inline PcaModel pca_fit(const Matrix& x, Index r) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 2) throw std::invalid_argument("pca_fit: need at least two rows");
  if (r < 1 || r > std::min(n - 1, d)) {
    throw std::invalid_argument("pca_fit: r=" + std::to_string(r) + " outside [1, " +
                                std::to_string(std::min(n - 1, d)) + "]");
  }
  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);

  model.components.resize(r, d);
  model.explained_variance.resize(r);

  if (n >= d) {
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    for (Index i = 0; i < r; ++i) {
      model.components.row(i) = svd.matrixV().col(i).transpose();
      model.explained_variance(i) = sv(i) * sv(i) / denom;
    }
  } else {
    const Matrix gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success)
      throw NumericError("pca_fit: Gram eigendecomposition failed");
    const Vector& lambda = eig.eigenvalues();  // ascending
    const double top = std::max(lambda(n - 1), 0.0);
    const double cutoff = top * static_cast<double>(n) * 16.0 *
                          std::numeric_limits<double>::epsilon();
    Index filled = 0;
    for (Index i = 0; i < r; ++i) {
      const double l = lambda(n - 1 - i);
      model.explained_variance(i) = std::max(l, 0.0) / denom;
      if (l > cutoff && filled == i) {
        model.components.row(i) =
            (centered.transpose() * eig.eigenvectors().col(n - 1 - i)).transpose() /
            std::sqrt(l);
        ++filled;
      }
    }
    // Polish, then fill null-variance directions.
    for (Index i = 0; i < filled; ++i) {
      const double nrm = detail::orthogonalize_row(model.components, i, i);
      model.components.row(i) /= nrm;
    }
    if (filled < r) {
      for (Index i = filled; i < r; ++i) model.explained_variance(i) = 0.0;
      detail::complete_orthonormal_rows(model.components, filled);
    }
  }

  for (Index i = 0; i < r; ++i) {
    Index arg = 0;
    model.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (model.components(i, arg) < 0) model.components.row(i) *= -1.0;
  }
  return model;
}

/// (x - mean) projected onto the component rows; rows(x) x r.
inline Matrix pca_transform(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw std::invalid_argument("pca_transform: expected " +
                                std::to_string(model.input_dim()) + " columns, got " +
                                std::to_string(x.cols()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

/// Unbiased sample covariance (divisor rows - 1), exactly symmetric.
inline Matrix covariance(const Matrix& x) {
  if (x.rows() < 2) throw std::invalid_argument("covariance: need at least two rows");
  const Matrix centered = x.rowwise() - x.colwise().mean();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

/// Default regularizer: 1e-6 times the mean variance, floored at 1e-12.
inline double default_ridge(const Matrix& cov) {
  if (cov.rows() == 0) return 1e-12;
  return std::max(1e-6 * cov.trace() / static_cast<double>(cov.rows()), 1e-12);
}

namespace detail {

inline void require_symmetric(const Matrix& cov, const char* who) {
  if (cov.rows() != cov.cols() || cov.rows() == 0)
    throw std::invalid_argument(std::string(who) + ": covariance must be square");
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1.0);
  if (!cov.allFinite() || (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument(std::string(who) + ": covariance must be finite and symmetric");
}

inline double gaussian_entropy_of(const Matrix& regularized) {
  Eigen::LLT<Matrix> llt(regularized);
  if (llt.info() != Eigen::Success)
    throw NumericError("gaussian_entropy: covariance is not positive definite after ridge");
  const auto diag = llt.matrixLLT().diagonal();
  double logdet = 0.0;
  for (Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0)) throw NumericError("gaussian_entropy: zero pivot");
    logdet += 2.0 * std::log(diag(i));
  }
  const double dim = static_cast<double>(regularized.rows());
  return 0.5 * (dim * std::log(2.0 * std::numbers::pi * std::numbers::e) + logdet);
}

}  // namespace detail

/// Differential entropy (nats) of N(0, cov + ridge * I).
inline double gaussian_entropy(const Matrix& cov, double ridge) {
  detail::require_symmetric(cov, "gaussian_entropy");
  if (!(ridge >= 0.0) || !std::isfinite(ridge))
    throw std::invalid_argument("gaussian_entropy: ridge must be finite and >= 0");
  Matrix reg = cov;
  reg.diagonal().array() += ridge;
  return detail::gaussian_entropy_of(reg);
}

/// Entropy with a per-coordinate ridge, N(0, cov + diag(ridge)).
inline double gaussian_entropy(const Matrix& cov, const Vector& ridge) {
  detail::require_symmetric(cov, "gaussian_entropy");
  if (ridge.size() != cov.rows() || !ridge.allFinite() || (ridge.array() < 0.0).any())
    throw std::invalid_argument("gaussian_entropy: ridge vector invalid");
  Matrix reg = cov;
  reg.diagonal() += ridge;
  return detail::gaussian_entropy_of(reg);
}

}  // namespace cbbench
