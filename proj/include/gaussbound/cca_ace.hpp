#pragma once

#include <cstdint>
#include <vector>

#include "gaussbound/common.hpp"
#include "gaussbound/smoother.hpp"

namespace gaussbound {

/// Fitted transform pair: columns of U = phi(X) and V = psi(Y), standardized
/// (divisor n), with canonical correlations in descending order.
struct CanonicalModel {
  Matrix u;
  Matrix v;
  Vector rho;
  Matrix u_source;  // column j: the psi iterate whose E[. | X] produced u_j (ACE only)
  std::vector<std::vector<double>> trace;  // per-pair objective sequence
  std::vector<bool> converged;
  std::vector<int> iterations;

  [[nodiscard]] Eigen::Index k() const { return rho.size(); }
};

struct AceOptions {
  int k = 0;  // <= 0: min(d_x, d_y)
  SmootherConfig smoother;
  double tol = 1e-5;
  int max_iter = 200;
  bool random_init = false;
  std::uint64_t seed = 0;
};

CanonicalModel ace_fit(const PairedSamples& samples, const AceOptions& options = {});

struct BoundValue {
  double nats = 0.0;
  bool saturated = false;
};

/// -1/2 sum ln(1 - rho_i^2) in nats.
BoundValue ace_upper_bound(const Vector& rho);
inline BoundValue ace_upper_bound(const CanonicalModel& model) { return ace_upper_bound(model.rho); }

/// True when the ground-truth MI exceeds the ACE bound, i.e. no jointly
/// Gaussian representation can be lossless.
inline bool lossless_gaussian_impossible(double true_mi_nats, double ace_bound_nats) {
  return true_mi_nats > ace_bound_nats;
}

struct KccaOptions {
  int k = 1;
  double width = 0.0;  // <= 0: median pairwise distance
  double ridge = 1e-3;
  int max_rank = 300;
  std::uint64_t seed = 0;
};

/// Regularized Gaussian-kernel CCA on low-rank (pivoted incomplete Cholesky)
/// factors of the centered kernel matrices.
CanonicalModel kcca_fit(const PairedSamples& samples, const KccaOptions& options = {});

/// Gram-Schmidt v against the columns of basis (empirical inner product),
/// then standardize. Returns false if nothing is left.
bool orthonormalize_against(Vector& v, const Matrix& basis, Eigen::Index count);

}  // namespace gaussbound
