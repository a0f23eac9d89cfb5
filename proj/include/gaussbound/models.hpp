#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaussbound/common.hpp"

namespace gaussbound {

inline constexpr double kEulerGamma = 0.57721566490153286061;

enum class ModelFamily {
  Gm1d,         // X ~ N(0,1); Y = X + W w.p. p, else Z ~ N(mu_z, 1)
  MvgScramble,  // Y = X + W Gaussian, both mirrored on [-1, 1]
  ExpGamma,     // Y = X + W exponential, mirrored on [0, 2], then rotated
  GmMv,         // independent coordinate replicas of Gm1d
  Gaussian,     // jointly Gaussian with a given joint covariance
};

struct ModelSpec {
  ModelFamily family = ModelFamily::Gm1d;
  int d = 1;
  double mu_z = 10.0;
  double eps = 0.1;
  double p = 0.5;                      // probability of the Y = X + W branch
  std::uint64_t rotation_seed = 1234;  // ExpGamma only
  Matrix joint_cov;                    // Gaussian only, (dx + dy) square
  int dx = 1;                          // Gaussian only

  static ModelSpec gm1d(double mu_z = 10.0, double eps = 0.1);
  static ModelSpec gaussian_pair(double rho);
  static ModelSpec gaussian(Matrix joint_cov, int dx);

  void validate() const;
  [[nodiscard]] int x_dim() const;
  [[nodiscard]] int y_dim() const;
};

std::string family_name(ModelFamily family);
ModelFamily parse_family(const std::string& name);

struct ModelSample {
  PairedSamples samples;
  PairedSamples raw;             // before mirroring and rotation
  std::vector<std::uint8_t> branch;  // n x d row-major, 1 = the X + W branch (mixtures only)
  Matrix rotation_x;
  Matrix rotation_y;
  double true_mi = 0.0;          // nats
};

ModelSample sample_model(const ModelSpec& spec, Eigen::Index n, std::uint64_t seed);

/// Analytic (or numerically exact) I(X;Y) in nats.
double model_true_mi(const ModelSpec& spec);

ModelSample gm1d_sample(Eigen::Index n, double mu_z, double eps, std::uint64_t seed);
ModelSample mvg_scramble_sample(Eigen::Index n, int d, std::uint64_t seed);
ModelSample expgamma_sample(Eigen::Index n, int d, std::uint64_t seed, std::uint64_t rotation_seed = 1234);
ModelSample gm_mv_sample(Eigen::Index n, int d, double mu_z, double eps, std::uint64_t seed);

struct MiResult {
  double nats = 0.0;         // numeric integration
  double closed_form = 0.0;  // non-overlap approximation, nats
};

/// I(X;Y) of the scalar mixture model by nested adaptive quadrature.
/// Results are memoized per (mu_z, eps, p) unless `cached` is false.
MiResult gm1d_true_mi(double mu_z, double eps, double p = 0.5, bool cached = true);

/// Reflection t -> lo + hi - t inside [lo, hi], identity outside.
double mirror_transform(double t, double lo, double hi);

/// Inverts the mirror and rotation of a scrambled sample.
PairedSamples unscramble(const ModelSpec& spec, const ModelSample& sample);

}  // namespace gaussbound
