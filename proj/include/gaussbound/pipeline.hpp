#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaussbound/agce.hpp"
#include "gaussbound/biterminal.hpp"
#include "gaussbound/cca_ace.hpp"
#include "gaussbound/gib.hpp"
#include "gaussbound/ib_discrete.hpp"
#include "gaussbound/models.hpp"

namespace gaussbound {

enum class Method { Ace, Agce, Offshelf, Biterminal, Kcca, Naive };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct PipelineOptions {
  SmootherConfig smoother;
  int k = 0;  // canonical pairs for ace / kcca; <= 0: min(d_x, d_y)
  int restarts = 8;
  double agce_tol = 1e-4;
  int agce_max_iter = 100;
  BiterminalOptions biterminal;
  KccaOptions kcca;
  bool with_upper = true;  // also fit ACE for the upper bound (not for kcca)
};

struct PipelineResult {
  Method method = Method::Ace;
  Matrix u;  // separately Gaussianized representations
  Matrix v;
  Vector rho;          // canonical correlations of (u, v)
  BoundValue lower;    // Gaussian bound of (u, v), nats
  std::optional<BoundValue> upper;  // ACE bound, nats
  std::optional<double> true_mi;    // nats, when known
  std::optional<bool> lossless_impossible;
  Vector w2_u;  // per-column W2 to N(0, 1)
  Vector w2_v;
  bool converged = true;
  std::vector<std::string> notes;
};

/// Method transform followed by the Gaussian bound. Transforms needing a
/// scalar pair (agce, offshelf) reject d > 1.
PipelineResult run_method(const PairedSamples& samples, Method method, const PipelineOptions& options = {},
                          std::uint64_t seed = 0);

/// GIB curve of a Gaussianized pair on the default beta grid.
IBCurve gib_curve_from_samples(const Matrix& u, const Matrix& v, int grid_points = 200);

struct CurveBundle {
  IBCurve method;
  IBCurve naive;  // GIB on the raw covariance of (X, Y)
  std::optional<IBCurve> reference;
  bool reference_fallback = false;
};

struct CurveOptions {
  int grid_points = 200;
  int quadrature_m = 32;
  std::vector<double> anneal_schedule;  // empty: default
  bool reference = true;
};

/// The naive curve uses the raw samples; the reference curve is the reverse-
/// annealed quadrature discretization of `model` when given.
CurveBundle build_curves(const PairedSamples& samples, const PipelineResult& fitted, const ModelSpec* model,
                         const CurveOptions& options = {});

/// Largest shortfall max(0, below(I_TX) - above(I_TX)) over the points of
/// `below`.
double curve_violation(const IBCurve& below, const IBCurve& above);

}  // namespace gaussbound
