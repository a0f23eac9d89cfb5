#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gaussbound/common.hpp"

namespace gaussbound {

enum class SmootherKind { Knn, Kernel };

struct SmootherConfig {
  SmootherKind kind = SmootherKind::Knn;
  int k = 0;               // <= 0: default_knn_k
  double bandwidth = 0.0;  // <= 0: Scott's rule on the standardized predictors
};

/// ceil(n^{4/(4+d)} / 2) clamped to [3, n].
int default_knn_k(Eigen::Index n, Eigen::Index d);

/// Mean of z over the k nearest neighbors of each x_i (self included, other
/// distance ties broken by lower sample index).
Vector knn_smooth(const Matrix& x, VectorRef z, int k);

struct KernelSmoothResult {
  Vector fitted;
  std::vector<Eigen::Index> fallback_points;  // points where kNN replaced the kernel
};

/// Nadaraya-Watson with Gaussian weights exp(-|x_i - x_j|^2 / (2 h^2)).
KernelSmoothResult kernel_smooth(const Matrix& x, VectorRef z, double bandwidth);

/// Conditional-mean operator z -> E[z | x] with the neighborhood structure
/// of x precomputed, so repeated smoothing against the same x is cheap.
class ConditionalMean {
 public:
  ConditionalMean(Matrix x, SmootherConfig config);

  [[nodiscard]] Vector operator()(VectorRef z) const { return smooth(z, nullptr); }

  /// As operator(); kernel fallback points are appended to `fallbacks`.
  Vector smooth(VectorRef z, std::vector<Eigen::Index>* fallbacks) const;

  /// Out-of-sample evaluation at the rows of x_new (no self point).
  [[nodiscard]] Vector predict(const Matrix& x_new, VectorRef z) const;

  [[nodiscard]] const SmootherConfig& config() const { return config_; }
  [[nodiscard]] const Matrix& x() const { return x_; }
  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] double bandwidth() const { return bandwidth_; }

 private:
  struct Range {
    std::int32_t begin;
    std::int32_t end;
  };
  using RangeSet = std::vector<Range>;

  RangeSet ranges_1d(double v, std::int64_t self_pos, int k) const;
  std::vector<std::int32_t> neighbors_nd(const Eigen::Ref<const Eigen::RowVectorXd>& q,
                                         Eigen::Index self, int k) const;
  double knn_at(Eigen::Index row_or_minus1, const Eigen::Ref<const Eigen::RowVectorXd>& q,
                VectorRef z, int k) const;
  double kernel_at(const Eigen::Ref<const Eigen::RowVectorXd>& q, VectorRef z,
                   Eigen::Index self, bool& underflow) const;

  Matrix x_;
  SmootherConfig config_;
  int k_ = 0;
  double bandwidth_ = 0.0;
  int fallback_k_ = 0;

  // 1-D: samples sorted by (value, index), with runs of equal values.
  std::vector<std::int32_t> order_;
  std::vector<std::int32_t> position_;    // sample index -> sorted position
  std::vector<double> sorted_;
  std::vector<std::int32_t> group_of_;    // sorted position -> group id
  std::vector<std::int32_t> group_start_; // group id -> first sorted position (size G+1)
  std::vector<RangeSet> ranges_;          // per sorted position

  // d > 1: neighbor lists, row-major n x k (empty if not cached).
  std::vector<std::int32_t> neighbors_;
};

}  // namespace gaussbound
