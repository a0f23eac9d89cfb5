#pragma once

#include <vector>

#include "gaussbound/common.hpp"
#include "gaussbound/stats.hpp"

namespace gaussbound {

enum class InfoUnits { Nats, Bits };

struct IBPoint {
  double beta = 0.0;
  double itx = 0.0;  // I(T;X)
  double ity = 0.0;  // I(T;Y)
};

struct IBCurve {
  std::vector<IBPoint> points;  // stored in nats
  InfoUnits units = InfoUnits::Nats;
  std::vector<IBPoint> raw;     // pre-cleanup points, when cleanup changed anything
  std::vector<bool> converged;  // per point, when the producer iterates

  /// Points expressed in `units`.
  [[nodiscard]] std::vector<IBPoint> expressed() const;
};

struct GibSpectrum {
  Vector lambda;     // ascending, clamped to [0, 1]
  Matrix v;          // row i: left eigenvector v_i of C_{X|Y} C_X^{-1}
  Vector r;          // v_i^T C_X v_i
  Vector beta_crit;  // 1 / (1 - lambda_i), +inf when lambda_i = 1
  Matrix cx;
  Matrix cx_given_y;
};

GibSpectrum gib_spectrum(const Matrix& cx, const Matrix& cy, const Matrix& cxy);
inline GibSpectrum gib_spectrum(const CovarianceBlocks& b) { return gib_spectrum(b.cu, b.cv, b.cuv); }

/// Rows a_i v_i^T for the components active at beta (beta > beta_crit_i).
/// Components with lambda_i <= 1e-10 are capped at 30 nats of I(T;X) each and
/// set `saturated`.
Matrix gib_projection(const GibSpectrum& spec, double beta, bool* saturated = nullptr);

struct PointInfo {
  double itx = 0.0;
  double ity = 0.0;
};

/// Information of T = A X + zeta, zeta ~ N(0, I).
PointInfo gib_point_info(const Matrix& a, const Matrix& cx, const Matrix& cx_given_y);

IBCurve gib_curve(const GibSpectrum& spec, const std::vector<double>& beta_grid);

/// `count` log-spaced values from 0.9 beta_1^c to 100 beta_1^c.
std::vector<double> default_beta_grid(const GibSpectrum& spec, int count = 200);

/// I(X;Y) of the Gaussian pair, -1/2 sum ln lambda_i (nats).
double gib_total_information(const GibSpectrum& spec);

/// Piecewise-linear I_TY at the given I_TX along the curve (points sorted by
/// I_TX). Beyond the last point the curve is flat.
double curve_ity_at(const IBCurve& curve, double itx);

struct CurveCheck {
  bool dpi = true;        // I_TY <= I_TX + tol
  bool monotone = true;   // both coordinates nondecreasing in beta
  bool concave = true;    // chord test on distinct I_TX
  double worst_concavity = 0.0;
};

CurveCheck check_curve(const IBCurve& curve, double tol = 1e-6);

/// Upper concave envelope of the points, in the plane (I_TX, I_TY),
/// anchored at the origin.
std::vector<IBPoint> concave_envelope(std::vector<IBPoint> points);

}  // namespace gaussbound
