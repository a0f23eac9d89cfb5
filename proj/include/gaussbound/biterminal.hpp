#pragma once

#include <cstdint>
#include <vector>

#include "gaussbound/cca_ace.hpp"
#include "gaussbound/common.hpp"
#include "gaussbound/stats.hpp"

namespace gaussbound {

struct GaussianizeLayer {
  Matrix rotation;                // applied as z -> z * rotation^T
  std::vector<MonotoneMap> maps;  // per output coordinate
};

struct GaussianizeChain {
  std::vector<GaussianizeLayer> layers;
  std::vector<double> objective_trace;  // separate: pairwise binned-MI proxy per layer; bi-terminal: joint objective
  Vector normality_stat;                // per-coordinate KS after the last probe rotation
  bool converged = false;

  /// Pushes new rows through every layer.
  [[nodiscard]] Matrix apply(const Matrix& block) const;
};

struct SeparateOptions {
  int max_layers = 50;
  double normality_tol = -1.0;  // < 0: 1.5 * 1.36 / sqrt(n)
};

struct SeparateResult {
  Matrix block;
  GaussianizeChain chain;
};

/// Iterative rotation + marginal Gaussianization of one block, blind to any
/// other variable. Layer l draws its rotation from derive_seed(seed, l).
SeparateResult separate_gaussianize(const Matrix& block, const SeparateOptions& options = {}, std::uint64_t seed = 0);

/// Gaussian MI bound of the (U, V) sample covariance; saturated when the
/// joint covariance is numerically singular.
BoundValue joint_objective(const Matrix& u, const Matrix& v);

struct BiterminalOptions {
  int outer_iters = 30;
  int inner_tries = 40;  // per side and outer iteration
  double normality_tol = -1.0;
};

struct BiterminalResult {
  Matrix u;
  Matrix v;
  GaussianizeChain chain_u;
  GaussianizeChain chain_v;
  std::vector<double> objective_trace;             // after every side update
  std::vector<std::vector<double>> accepted;       // accepted objectives per (outer iteration, side)
  bool converged = false;
};

/// Bi-terminal Gaussianization: each side's rotation is refined by stochastic
/// Givens hill climbing on the joint objective. Side U uses the seed stream
/// derive_seed(seed, 0), side V derive_seed(seed, 1); with inner_tries = 0
/// each side reproduces separate_gaussianize on that stream.
BiterminalResult biterminal_gaussianize(const Matrix& u, const Matrix& v, const BiterminalOptions& options = {},
                                        std::uint64_t seed = 0);

/// Sum over coordinate pairs of binned_mutual_information (nats).
double pairwise_dependence(const Matrix& block, int bins = 20);

}  // namespace gaussbound
