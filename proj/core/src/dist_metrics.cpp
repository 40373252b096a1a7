// Copyright 2026 The cfaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cfaudit/dist_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "cfaudit/error.hpp"
#include "cfaudit/parallel.hpp"

namespace cfaudit {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row blocks have a fixed height so that every kernel row sum is computed
// by the same operations whatever the thread count.
constexpr std::size_t kBlockRows = 64;

RowMatrix to_eigen(const EmbeddingMatrix& m, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(m.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = m.row(rows[r]);
    for (std::size_t k = 0; k < m.dim(); ++k) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = src[k];
    }
  }
  return out;
}

RowMatrix to_eigen(const EmbeddingMatrix& m) {
  std::vector<std::size_t> all(m.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return to_eigen(m, all);
}

RowMatrix to_eigen(const SquareMatrix& m) {
  RowMatrix out(static_cast<Eigen::Index>(m.size), static_cast<Eigen::Index>(m.size));
  std::copy(m.values.begin(), m.values.end(), out.data());
  return out;
}

SquareMatrix from_eigen(const RowMatrix& m) {
  SquareMatrix out(static_cast<std::size_t>(m.rows()));
  std::copy(m.data(), m.data() + m.size(), out.values.begin());
  return out;
}

/// Sum over j of kernel(<a_i, b_j>, i, j) for every row i of `a`, skipping
/// j == i when `skip_diagonal`.
template <typename Kernel>
std::vector<double> kernel_row_sums(const RowMatrix& a, const RowMatrix& b,
                                    Kernel kernel, bool skip_diagonal, int jobs) {
  const std::size_t n = static_cast<std::size_t>(a.rows());
  const std::size_t m = static_cast<std::size_t>(b.rows());
  std::vector<double> sums(n, 0.0);
  const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  parallel_for(blocks, jobs, [&](std::size_t blk) {
    const std::size_t begin = blk * kBlockRows;
    const std::size_t len = std::min(kBlockRows, n - begin);
    const RowMatrix gram =
        a.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(len)) *
        b.transpose();
    for (std::size_t r = 0; r < len; ++r) {
      const std::size_t i = begin + r;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (skip_diagonal && i == j) continue;
        s += kernel(gram(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)), i, j);
      }
      sums[i] = s;
    }
  });
  return sums;
}

double total(const std::vector<double>& v) { return pairwise_sum(v); }

double mmd2_unbiased_poly_rows(const RowMatrix& x, const RowMatrix& y, int jobs) {
  const double d = static_cast<double>(x.cols());
  auto poly = [d](double g, std::size_t, std::size_t) {
    const double t = g / d + 1.0;
    return t * t * t;
  };
  const double m = static_cast<double>(x.rows());
  const double n = static_cast<double>(y.rows());
  const double kxx = total(kernel_row_sums(x, x, poly, true, jobs)) / (m * (m - 1.0));
  const double kyy = total(kernel_row_sums(y, y, poly, true, jobs)) / (n * (n - 1.0));
  const double kxy = total(kernel_row_sums(x, y, poly, false, jobs)) / (m * n);
  return kxx + kyy - 2.0 * kxy;
}

void require_same_dim(const EmbeddingMatrix& x, const EmbeddingMatrix& y) {
  if (x.dim() != y.dim()) {
    throw Error("embedding dimension mismatch: " + std::to_string(x.dim()) + " vs " +
                std::to_string(y.dim()));
  }
}

void require_symmetric(const SquareMatrix& a) {
  double scale = 1.0;
  for (double v : a.values) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < a.size; ++i) {
    for (std::size_t j = i + 1; j < a.size; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-8 * scale) {
        throw Error("matrix is not symmetric at (" + std::to_string(i) + ", " +
                    std::to_string(j) + ")");
      }
    }
  }
}

/// Eigenvalues clamped by the PSD policy: small negatives become 0, large
/// negatives throw.
Eigen::VectorXd clamped_eigenvalues(const Eigen::VectorXd& eig) {
  if (eig.size() == 0) return eig;
  const double largest = eig.maxCoeff();
  const double tolerance = 1e-8 * std::max(largest, 0.0);
  Eigen::VectorXd out = eig;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) < -tolerance) {
      throw Error("matrix is not positive semidefinite (eigenvalue " +
                  std::to_string(out(i)) + ")");
    }
    out(i) = std::max(out(i), 0.0);
  }
  return out;
}

void validate_stats(const GaussianStats& s, const char* which) {
  if (s.covariance.size != s.mean.size() ||
      s.covariance.values.size() != s.mean.size() * s.mean.size()) {
    throw Error(std::string(which) + ": covariance shape does not match mean");
  }
  if (s.sample_count < 2) throw Error(std::string(which) + ": need >=2 samples");
}

}  // namespace

SquareMatrix::SquareMatrix(std::size_t n, std::vector<double> v)
    : size(n), values(std::move(v)) {
  if (values.size() != n * n) throw Error("square matrix payload has wrong size");
}

SquareMatrix SquareMatrix::identity(std::size_t n) {
  SquareMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix SquareMatrix::diagonal(const std::vector<double>& d) {
  SquareMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

GaussianStats fit_gaussian(const EmbeddingMatrix& matrix) {
  const std::size_t n = matrix.rows();
  if (n < 2) {
    throw Error("need >=2 samples to fit a Gaussian (got " + std::to_string(n) + ")");
  }
  const std::size_t d = matrix.dim();
  RowMatrix x = to_eigen(matrix);
  GaussianStats s;
  s.sample_count = n;
  s.mean.resize(d);
  std::vector<double> column(n);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    s.mean[k] = pairwise_sum(column) / static_cast<double>(n);
  }
  for (std::size_t k = 0; k < d; ++k) {
    x.col(static_cast<Eigen::Index>(k)).array() -= s.mean[k];
  }
  RowMatrix cov = (x.transpose() * x) / static_cast<double>(n - 1);
  RowMatrix sym = 0.5 * (cov + cov.transpose());
  s.covariance = from_eigen(sym);
  return s;
}

SquareMatrix sqrtm_psd(const SquareMatrix& a) {
  require_symmetric(a);
  if (a.size == 0) return a;
  const RowMatrix m = to_eigen(a);
  Eigen::SelfAdjointEigenSolver<RowMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Eigen::VectorXd roots = clamped_eigenvalues(solver.eigenvalues()).cwiseSqrt();
  const RowMatrix& q = solver.eigenvectors();
  RowMatrix root = q * roots.asDiagonal() * q.transpose();
  RowMatrix sym = 0.5 * (root + root.transpose());
  return from_eigen(sym);
}

double frechet_distance(const GaussianStats& p, const GaussianStats& q) {
  validate_stats(p, "first distribution");
  validate_stats(q, "second distribution");
  if (p.dim() != q.dim()) {
    throw Error("dimension mismatch: " + std::to_string(p.dim()) + " vs " +
                std::to_string(q.dim()));
  }
  if (p.mean == q.mean && p.covariance == q.covariance) return 0.0;

  double mean_term = 0.0;
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double diff = p.mean[k] - q.mean[k];
    mean_term += diff * diff;
  }

  const RowMatrix root_p = to_eigen(sqrtm_psd(p.covariance));
  const RowMatrix cov_q = to_eigen(q.covariance);
  RowMatrix sandwich = root_p * cov_q * root_p;
  sandwich = (0.5 * (sandwich + sandwich.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<RowMatrix> solver(sandwich, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const double trace_root = clamped_eigenvalues(solver.eigenvalues()).cwiseSqrt().sum();

  const double trace_p = to_eigen(p.covariance).trace();
  const double trace_q = cov_q.trace();
  double d = mean_term + trace_p + trace_q - 2.0 * trace_root;
  if (d < 0.0) {
    if (d < -1e-6) {
      throw Error("Frechet distance evaluated to " + std::to_string(d) +
                  "; covariances are numerically inconsistent");
    }
    d = 0.0;
  }
  return d;
}

double polynomial_kernel(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty()) throw Error("kernel dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * b[i];
  const double t = dot / static_cast<double>(a.size()) + 1.0;
  return t * t * t;
}

double mmd2_unbiased_polynomial(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
                                int jobs) {
  require_same_dim(x, y);
  if (x.rows() < 2 || y.rows() < 2) throw Error("unbiased MMD needs >=2 rows per set");
  return mmd2_unbiased_poly_rows(to_eigen(x), to_eigen(y), jobs);
}

KidResult kid_unbiased(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
                       const KidOptions& options, int jobs) {
  require_same_dim(x, y);
  std::size_t m = options.subset_size;
  if (m == 0) m = std::min<std::size_t>({1000, x.rows(), y.rows()});
  if (m < 2) throw Error("KID subset size must be at least 2");
  if (m > x.rows() || m > y.rows()) {
    throw Error("KID subset size " + std::to_string(m) + " exceeds sample count (" +
                std::to_string(x.rows()) + ", " + std::to_string(y.rows()) + ")");
  }
  if (options.n_subsets == 0) throw Error("KID needs at least one subset");

  // Draw every subset up front so the estimates do not depend on scheduling.
  std::mt19937_64 rng(options.seed);
  auto draw = [&](std::size_t population) {
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (population - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
  };
  std::vector<std::vector<std::size_t>> xs, ys;
  for (std::size_t s = 0; s < options.n_subsets; ++s) {
    xs.push_back(draw(x.rows()));
    ys.push_back(draw(y.rows()));
  }

  KidResult result;
  result.subset_size = m;
  result.estimates.resize(options.n_subsets);
  parallel_for(options.n_subsets, jobs, [&](std::size_t s) {
    result.estimates[s] =
        mmd2_unbiased_poly_rows(to_eigen(x, xs[s]), to_eigen(y, ys[s]), 1);
  });
  const double count = static_cast<double>(options.n_subsets);
  result.mean = pairwise_sum(result.estimates) / count;
  std::vector<double> sq(result.estimates.size());
  for (std::size_t s = 0; s < sq.size(); ++s) {
    const double dev = result.estimates[s] - result.mean;
    sq[s] = dev * dev;
  }
  result.std = std::sqrt(pairwise_sum(sq) / count);
  return result;
}

double cmmd(const EmbeddingMatrix& x, const EmbeddingMatrix& y, double bandwidth,
            double scale, int jobs) {
  require_same_dim(x, y);
  if (x.empty() || y.empty()) throw Error("CMMD needs non-empty embedding sets");
  if (!(bandwidth > 0.0)) throw Error("CMMD bandwidth must be positive");
  if (!(scale > 0.0)) throw Error("CMMD scale must be positive");

  auto normalized = [](const EmbeddingMatrix& e) {
    RowMatrix r = to_eigen(e);
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      const double norm = r.row(i).norm();
      if (!(norm > 0.0)) {
        throw EmbeddingError("cannot normalize zero-norm row " + std::to_string(i),
                             static_cast<std::size_t>(i));
      }
      r.row(i) /= norm;
    }
    return r;
  };
  const RowMatrix xn = normalized(x);
  const RowMatrix yn = normalized(y);
  const Eigen::VectorXd x_sq = xn.rowwise().squaredNorm();
  const Eigen::VectorXd y_sq = yn.rowwise().squaredNorm();
  const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);

  auto rbf = [gamma](const Eigen::VectorXd& a_sq, const Eigen::VectorXd& b_sq) {
    return [gamma, &a_sq, &b_sq](double g, std::size_t i, std::size_t j) {
      const double d2 = std::max(0.0, a_sq(static_cast<Eigen::Index>(i)) +
                                          b_sq(static_cast<Eigen::Index>(j)) - 2.0 * g);
      return std::exp(-gamma * d2);
    };
  };
  const double nx = static_cast<double>(x.rows());
  const double ny = static_cast<double>(y.rows());
  const double kxx = total(kernel_row_sums(xn, xn, rbf(x_sq, x_sq), false, jobs)) / (nx * nx);
  const double kyy = total(kernel_row_sums(yn, yn, rbf(y_sq, y_sq), false, jobs)) / (ny * ny);
  const double kxy = total(kernel_row_sums(xn, yn, rbf(x_sq, y_sq), false, jobs)) / (nx * ny);
  return std::max(0.0, scale * (kxx + kyy - 2.0 * kxy));
}

}  // namespace cfaudit
