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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cfaudit/embedding_store.hpp"

namespace cfaudit {

/// Dense row-major square matrix of doubles.
struct SquareMatrix {
  std::size_t size = 0;
  std::vector<double> values;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : size(n), values(n * n, 0.0) {}
  SquareMatrix(std::size_t n, std::vector<double> v);

  static SquareMatrix identity(std::size_t n);
  static SquareMatrix diagonal(const std::vector<double>& d);

  double& operator()(std::size_t i, std::size_t j) { return values[i * size + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * size + j]; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;
};

/// Gaussian fit of an embedding set.
struct GaussianStats {
  std::vector<double> mean;
  SquareMatrix covariance;
  std::size_t sample_count = 0;

  std::size_t dim() const noexcept { return mean.size(); }

  friend bool operator==(const GaussianStats&, const GaussianStats&) = default;
};

/// Column mean and unbiased (n-1) covariance, symmetrized. Needs n >= 2.
GaussianStats fit_gaussian(const EmbeddingMatrix& matrix);

/// Principal square root of a symmetric PSD matrix through its
/// eigendecomposition. Eigenvalues in [-1e-8 * max, 0) are clamped to zero;
/// anything more negative, or an input asymmetric beyond 1e-8 (relative to
/// its largest entry), throws.
SquareMatrix sqrtm_psd(const SquareMatrix& a);

/// ||mu1 - mu2||^2 + Tr(S1) + Tr(S2) - 2 Tr((S1^1/2 S2 S1^1/2)^1/2).
/// Bitwise-identical inputs give exactly 0; results in [-1e-6, 0) clamp to 0.
double frechet_distance(const GaussianStats& p, const GaussianStats& q);

/// (a.b / d + 1)^3
double polynomial_kernel(std::span<const float> a, std::span<const float> b);

struct KidOptions {
  std::size_t subset_size = 0;  // 0 selects min(1000, n_x, n_y)
  std::size_t n_subsets = 100;
  std::uint64_t seed = 0;
};

struct KidResult {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across subsets
  std::vector<double> estimates;
  std::size_t subset_size = 0;
};

/// Unbiased MMD^2 with the cubic polynomial kernel over all rows of x and y.
double mmd2_unbiased_polynomial(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
                                int jobs = 1);

/// KID: mean and std of unbiased MMD^2 over `n_subsets` seeded draws of
/// `subset_size` rows without replacement from each set. Each draw is a
/// partial Fisher-Yates over row indices with std::mt19937_64(seed), x then y.
KidResult kid_unbiased(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
                       const KidOptions& options, int jobs = 1);

inline constexpr double kDefaultCmmdBandwidth = 10.0;
inline constexpr double kDefaultCmmdScale = 1000.0;

/// Biased (V-statistic) MMD^2 with a Gaussian RBF kernel of width
/// `bandwidth` on unit-normalized rows, multiplied by `scale`.
double cmmd(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
            double bandwidth = kDefaultCmmdBandwidth, double scale = kDefaultCmmdScale,
            int jobs = 1);

}  // namespace cfaudit
