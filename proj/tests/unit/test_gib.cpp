#include "doctest.h"

#include <cmath>

#include "gaussbound/gib.hpp"

using namespace gaussbound;

namespace {

GibSpectrum scalar(double rho) {
  Matrix cx(1, 1), cy(1, 1), cxy(1, 1);
  cx << 1.0;
  cy << 1.0;
  cxy << rho;
  return gib_spectrum(cx, cy, cxy);
}

// Diagonal pair with canonical correlations sqrt(1 - lambda_i).
GibSpectrum diagonal(const std::vector<double>& lambda) {
  const auto d = static_cast<Eigen::Index>(lambda.size());
  Matrix cxy = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) cxy(i, i) = std::sqrt(1.0 - lambda[static_cast<std::size_t>(i)]);
  return gib_spectrum(Matrix::Identity(d, d), Matrix::Identity(d, d), cxy);
}

}  // namespace

TEST_CASE("scalar spectrum") {
  const auto s = scalar(0.6);
  CHECK(s.lambda[0] == doctest::Approx(0.64));
  CHECK(s.beta_crit[0] == doctest::Approx(1.0 / 0.36));
  CHECK(s.r[0] == doctest::Approx(1.0));
  CHECK(gib_total_information(s) == doctest::Approx(-0.5 * std::log(0.64)));
}

TEST_CASE("independent and deterministic limits") {
  Matrix c = Matrix::Identity(2, 2);
  const auto ind = gib_spectrum(c, c, Matrix::Zero(2, 2));
  CHECK(ind.lambda[0] == doctest::Approx(1.0));
  CHECK(ind.lambda[1] == doctest::Approx(1.0));
  CHECK(std::isinf(ind.beta_crit[0]));
  const auto curve = gib_curve(ind, {1.0, 10.0, 1e4});
  for (const auto& p : curve.points) {
    CHECK(p.itx == 0.0);
    CHECK(p.ity == 0.0);
  }

  const auto det = scalar(1.0 - 1e-9);
  CHECK(det.lambda[0] <= 1e-8);
  CHECK(det.beta_crit[0] == doctest::Approx(1.0).epsilon(1e-6));
  bool sat = false;
  const auto exact = gib_spectrum(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1) * 1.0);
  CHECK(exact.lambda[0] == 0.0);
  const Matrix a = gib_projection(exact, 2.0, &sat);
  CHECK(sat);
  const auto info = gib_point_info(a, exact.cx, exact.cx_given_y);
  CHECK(info.itx == doctest::Approx(30.0));
  CHECK(std::isfinite(info.ity));

  CHECK_THROWS_AS(gib_spectrum(Matrix::Zero(1, 1), Matrix::Identity(1, 1), Matrix::Zero(1, 1)), ConditioningError);
}

TEST_CASE("projection regimes") {
  const auto s = scalar(0.6);
  CHECK(gib_projection(s, 0.5 * s.beta_crit[0]).rows() == 0);
  CHECK(gib_projection(s, s.beta_crit[0]).rows() == 0);
  const Matrix just = gib_projection(s, s.beta_crit[0] * (1.0 + 1e-12));
  REQUIRE(just.rows() == 1);
  CHECK(std::abs(just(0, 0)) <= 1e-5);
  const Matrix a = gib_projection(s, 2.0 / 0.36);
  REQUIRE(a.rows() == 1);
  CHECK(std::abs(a(0, 0)) == doctest::Approx(1.25));
  CHECK_THROWS_AS(gib_projection(s, 0.0), ParameterError);
}

TEST_CASE("point information") {
  const auto s = scalar(0.6);
  CHECK(gib_point_info(Matrix(0, 1), s.cx, s.cx_given_y).itx == 0.0);
  Matrix a(1, 1);
  a << 1.25;
  const auto p = gib_point_info(a, s.cx, s.cx_given_y);
  CHECK(p.itx == doctest::Approx(0.5 * std::log(2.5625)).epsilon(1e-12));
  CHECK(p.itx == doctest::Approx(0.47049).epsilon(1e-4));
  CHECK(p.ity == doctest::Approx(0.5 * std::log(2.5625) - 0.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(p.ity == doctest::Approx(0.12392).epsilon(1e-4));

  for (double rho : {0.3, 0.6, 0.9}) {
    const auto t = scalar(rho);
    const auto far = gib_point_info(gib_projection(t, 1e4), t.cx, t.cx_given_y);
    CHECK(std::abs(far.ity - gib_total_information(t)) <= 1e-3);
  }
}

TEST_CASE("curve endpoint in bits") {
  auto s = scalar(0.703);
  auto c = gib_curve(s, {1e3, 1e6});
  c.units = InfoUnits::Bits;
  CHECK(c.expressed().back().ity == doctest::Approx(0.4917).epsilon(1e-3));
  CHECK(c.expressed().back().ity == doctest::Approx(nats_to_bits(c.points.back().ity)).epsilon(1e-12));
}

TEST_CASE("slope at activation equals 1/beta") {
  const auto s = diagonal({0.3, 0.7});
  CHECK(s.lambda[0] == doctest::Approx(0.3));
  CHECK(s.lambda[1] == doctest::Approx(0.7));
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double bc = s.beta_crit[i];
    for (double beta : {bc * 1.01, bc * 1.5}) {
      const double h = 1e-5 * beta;
      const auto lo = gib_curve(s, {beta - h}).points[0];
      const auto hi = gib_curve(s, {beta + h}).points[0];
      const double slope = (hi.ity - lo.ity) / (hi.itx - lo.itx);
      CHECK(slope == doctest::Approx(1.0 / beta).epsilon(1e-3));
    }
  }
  // Activation order follows ascending lambda.
  CHECK(gib_projection(s, 0.5 * (s.beta_crit[0] + s.beta_crit[1])).rows() == 1);
}

TEST_CASE("curve invariants on a random spectrum") {
  Rng rng(3);
  std::normal_distribution<double> nd;
  Matrix m(6, 6);
  for (auto& v : m.reshaped()) v = nd(rng);
  const Matrix joint = m * m.transpose() + 0.5 * Matrix::Identity(6, 6);
  const auto s = gib_spectrum(joint.topLeftCorner(3, 3), joint.bottomRightCorner(3, 3), joint.topRightCorner(3, 3));
  for (Eigen::Index i = 1; i < 3; ++i) CHECK(s.lambda[i] >= s.lambda[i - 1]);
  for (Eigen::Index i = 0; i < 3; ++i) {
    // Left eigenvector check: v^T C_{X|Y} C_X^{-1} = lambda v^T.
    const Vector lhs = (s.v.row(i) * s.cx_given_y * s.cx.inverse()).transpose();
    CHECK((lhs - s.lambda[i] * s.v.row(i).transpose()).norm() <= 1e-8);
    CHECK(s.r[i] > 0.0);
  }
  const auto curve = gib_curve(s, default_beta_grid(s));
  CHECK(curve.points.size() == 200);
  const auto chk = check_curve(curve, 1e-6);
  CHECK(chk.dpi);
  CHECK(chk.monotone);
  CHECK(chk.concave);
  for (const auto& p : curve.points) CHECK(p.ity <= std::min(p.itx, gib_total_information(s)) + 1e-9);
  CHECK(gib_point_info(gib_projection(s, 10.0), s.cx, s.cx_given_y).itx ==
        doctest::Approx(gib_curve(s, {10.0}).points[0].itx));
  CHECK_THROWS_AS(gib_curve(s, {2.0, 1.0}), ParameterError);
}

TEST_CASE("curve utilities") {
  IBCurve c;
  c.points = {{1, 1.0, 0.5}, {2, 2.0, 0.6}, {3, 3.0, 0.9}};
  CHECK(curve_ity_at(c, 0.5) == doctest::Approx(0.25));
  CHECK(curve_ity_at(c, 2.5) == doctest::Approx(0.75));
  CHECK(curve_ity_at(c, 5.0) == doctest::Approx(0.9));
  CHECK_FALSE(check_curve(c).concave);
  IBCurve env;
  env.points = concave_envelope(c.points);
  CHECK(check_curve(env).concave);
  CHECK(env.points[1].ity == doctest::Approx(0.7));
  for (std::size_t i = 0; i < 3; ++i) CHECK(env.points[i].ity >= c.points[i].ity);
}
