#pragma once

#include <cstdint>
#include <vector>

#include "gaussbound/common.hpp"

namespace gaussbound {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal inverse CDF, absolute accuracy better than 1e-9 on (0,1).
/// Throws DomainError outside the open unit interval.
double normal_quantile(double p);

/// Normal scores Phi^{-1}((i - 0.5) / n), i = 1..n, ascending. Cached per n.
const std::vector<double>& normal_scores(std::size_t n);

class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(VectorRef values);

  /// Fraction of samples <= x.
  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] std::size_t size() const { return sorted_.size(); }
  [[nodiscard]] const std::vector<double>& sorted_values() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

enum class Extrapolation { Clamp, LinearTail };

/// Piecewise-linear increasing map through (knots_in[i], knots_out[i]).
class MonotoneMap {
 public:
  MonotoneMap() = default;
  MonotoneMap(std::vector<double> knots_in, std::vector<double> knots_out,
              Extrapolation extrapolation = Extrapolation::LinearTail);

  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] Vector operator()(VectorRef x) const;
  [[nodiscard]] MonotoneMap inverse() const;

  [[nodiscard]] const std::vector<double>& knots_in() const { return in_; }
  [[nodiscard]] const std::vector<double>& knots_out() const { return out_; }
  [[nodiscard]] Extrapolation extrapolation() const { return extrapolation_; }

 private:
  std::vector<double> in_;
  std::vector<double> out_;
  Extrapolation extrapolation_ = Extrapolation::LinearTail;
};

struct GaussianizeResult {
  Vector values;
  MonotoneMap map;
};

/// Rank-based marginal Gaussianization: the sample with rank i (1-based, ties
/// broken uniformly at random from `seed`) is sent to Phi^{-1}((i - 0.5)/n).
GaussianizeResult marginal_gaussianize(VectorRef x, std::uint64_t seed);

/// Same transform without building the out-of-sample map.
Vector gaussianize_ranks(VectorRef x, Rng& rng);

/// Applies gaussianize_ranks to every column.
Matrix gaussianize_columns(const Matrix& block, Rng& rng);

struct CovarianceBlocks {
  Matrix cu;
  Matrix cv;
  Matrix cuv;

  [[nodiscard]] Matrix joint() const;
  static CovarianceBlocks from_samples(const Matrix& u, const Matrix& v);
};

/// Unbiased sample covariance (divisor n - 1).
Matrix covariance(const Matrix& samples);

/// Gaussian mutual-information bound in nats:
/// 0.5 * ln(|C_U| |C_V| / |C_[U,V]|).
double gaussian_mi_bound(const CovarianceBlocks& blocks);

/// Canonical correlations of the blocks, descending.
Vector canonical_correlations(const CovarianceBlocks& blocks);

/// Quantile-form squared 2-Wasserstein distance between the empirical
/// distribution of x and the standard normal, on the (i - 0.5)/n grid.
double w2_to_normal(VectorRef x);

/// Kolmogorov-Smirnov statistic of x against the standard normal.
double ks_normal(VectorRef x);

/// Pearson correlation.
double correlation(VectorRef a, VectorRef b);

/// Sample distance correlation (Szekely et al.), O(n^2) time, O(n) memory.
double distance_correlation(const Matrix& a, const Matrix& b);

/// Plug-in mutual information (nats) of two columns after equal-probability
/// binning of their ranks into `bins` cells per axis.
double binned_mutual_information(VectorRef a, VectorRef b, int bins);

/// Uniformly distributed rotation in SO(d).
Matrix random_rotation(Eigen::Index d, Rng& rng);

/// Centers and scales to unit variance (divisor n). Returns false if the
/// input has (numerically) zero variance, leaving it centered.
bool standardize(Vector& v);

}  // namespace gaussbound
