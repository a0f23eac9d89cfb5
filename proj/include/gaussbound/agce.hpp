#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gaussbound/common.hpp"
#include "gaussbound/models.hpp"
#include "gaussbound/smoother.hpp"
#include "gaussbound/stats.hpp"

namespace gaussbound {

/// x -> map(E_hat[target | x]) with a fitted smoother, or map(x * linear)
/// when `linear` is set (oracle mode).
struct FittedTransform {
  std::shared_ptr<const ConditionalMean> smoother;
  Vector target;
  Vector linear;
  MonotoneMap map;

  [[nodiscard]] Vector operator()(const Matrix& x_new) const;
};

struct AgcePair {
  FittedTransform phi;
  FittedTransform psi;
  Vector u;  // phi(X) on the fitting sample, exactly rank-Gaussian
  Vector v;  // psi(Y)
  double rho = 0.0;
  std::vector<double> trace;
  int restarts_used = 0;
  int best_restart = 0;
  std::vector<double> restart_rho;
  bool converged = false;
  bool independent_fit = false;
  double transport_loss_x = 0.0;  // E(phi - Xbar)^2 of the last X-side step
  double transport_loss_y = 0.0;
};

struct AgceStep {
  Vector values;
  MonotoneMap map;
  Vector conditional_mean;
  double transport_loss = 0.0;
  bool independent_fit = false;
  bool kept_previous = false;  // values == previous; map and conditional_mean are not meaningful
};

/// One half-step: Gaussianize E_hat[fixed | x]. With `previous`, a result
/// whose correlation with `fixed` is lower than that of `previous` is
/// discarded and `previous` is returned instead.
AgceStep agce_step(VectorRef fixed, const ConditionalMean& smoother, std::uint64_t seed,
                   const Vector* previous = nullptr);
AgceStep agce_step(VectorRef fixed, const Matrix& x_block, const SmootherConfig& config, std::uint64_t seed,
                   const Vector* previous = nullptr);

struct AgceOptions {
  SmootherConfig smoother;
  double tol = 1e-4;
  int max_iter = 100;
  int n_restarts = 8;
  double ace_tol = 1e-5;
};

/// Best local optimum over restarts. Restart 0 starts from the Gaussianized
/// ACE solution, the others from Gaussianized random cubics of y.
AgcePair agce_fit_1d(const PairedSamples& samples, const AgceOptions& options = {}, std::uint64_t seed = 0);

/// ACE followed by marginal Gaussianization of both outputs.
AgcePair offshelf_lower_1d(const PairedSamples& samples, const SmootherConfig& smoother = {},
                           std::uint64_t seed = 0, double ace_tol = 1e-5);

/// Direct marginal Gaussianization of x and y (benchmark).
AgcePair naive_gaussianize_1d(const PairedSamples& samples, std::uint64_t seed = 0);

/// Gaussian bound of a fitted pair, nats.
inline double agce_bound(const AgcePair& pair) {
  const double r = std::min(std::abs(pair.rho), 1.0 - 1e-12);
  return -0.5 * std::log1p(-r * r);
}

struct OracleAgceResult {
  std::vector<AgcePair> pairs;
  PairedSamples samples;
  Vector analytic_rho;  // canonical correlations of the joint covariance
};

/// Multivariate AGCE with analytic conditional distributions. Only the
/// jointly Gaussian family exposes them; anything else throws
/// UnsupportedModelError. k <= 2.
OracleAgceResult agce_fit_mv_oracle(const ModelSpec& spec, int k, Eigen::Index n, std::uint64_t seed,
                                    double tol = 1e-10, int max_iter = 1000);

}  // namespace gaussbound
