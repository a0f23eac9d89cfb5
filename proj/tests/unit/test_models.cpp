#include "doctest.h"

#include <cmath>

#include "gaussbound/models.hpp"
#include "gaussbound/stats.hpp"

using namespace gaussbound;

namespace {

// -int f ln f by the composite Simpson rule on [a, b].
template <class F>
double simpson_entropy(F f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = a + i * h;
    const double v = f(x);
    const double term = v > 0.0 ? -v * std::log(v) : 0.0;
    s += term * ((i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("gm1d sample correlation") {
  const auto s = gm1d_sample(100000, 10.0, 0.1, 1);
  CHECK(std::abs(correlation(s.samples.x.col(0), s.samples.y.col(0)) - 0.098) <= 0.01);
  double frac = 0.0;
  for (auto b : s.branch) frac += b;
  frac /= static_cast<double>(s.branch.size());
  CHECK(std::abs(frac - 0.5) <= 3.0 / std::sqrt(100000.0));
}

TEST_CASE("gm1d near-deterministic branch") {
  const auto s = gm1d_sample(1000, 10.0, 1e-12, 2);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    if (s.branch[static_cast<std::size_t>(i)]) CHECK(std::abs(s.samples.y(i, 0) - s.samples.x(i, 0)) < 1e-10);
  }
}

TEST_CASE("gm1d true mutual information") {
  const auto r = gm1d_true_mi(10.0, 0.1);
  CHECK(std::abs(nats_to_bits(r.nats) - 1.66) <= 0.02);
  CHECK(r.closed_form == doctest::Approx(0.25 * std::log(101.0)));
  CHECK(std::abs(r.nats - r.closed_form) < 1e-3);
  CHECK(gm1d_true_mi(10.0, 0.1, 1.0).nats == doctest::Approx(0.5 * std::log(101.0)).epsilon(1e-8));
  double prev = 0.0;
  for (double mu : {1.0, 2.0, 4.0, 6.0, 8.0}) {
    const double v = gm1d_true_mi(mu, 0.1).nats;
    CHECK(v > prev);
    CHECK(v <= r.closed_form + 1e-6);
    prev = v;
  }
}

TEST_CASE("mirror transform") {
  CHECK(mirror_transform(0.5, -1.0, 1.0) == -0.5);
  CHECK(mirror_transform(3.0, -1.0, 1.0) == 3.0);
  CHECK(mirror_transform(0.5, 0.0, 2.0) == 1.5);
  for (double t : {-3.0, -1.0, -0.3, 0.0, 0.7, 1.0, 2.5}) {
    CHECK(mirror_transform(mirror_transform(t, -1.0, 1.0), -1.0, 1.0) == t);
  }
  for (double t : {0.25, 0.5, 1.0, 1.75, 2.0, 3.0}) {
    CHECK(mirror_transform(mirror_transform(t, 0.0, 2.0), 0.0, 2.0) == t);
  }
  CHECK_THROWS_AS(mirror_transform(0.0, 1.0, 1.0), ParameterError);
}

TEST_CASE("scrambled Gaussian model") {
  CHECK(nats_to_bits(mvg_scramble_sample(10, 1, 1).true_mi) == doctest::Approx(0.5));
  CHECK(nats_to_bits(mvg_scramble_sample(10, 5, 1).true_mi) == doctest::Approx(2.5));
  const auto s = mvg_scramble_sample(10000, 2, 3);
  CHECK(ks_normal(s.samples.x.col(0)) <= 1.36 * 1.5 / 100.0);
  ModelSpec spec;
  spec.family = ModelFamily::MvgScramble;
  spec.d = 2;
  const auto back = unscramble(spec, s);
  CHECK(back.x == s.raw.x);
  CHECK(back.y == s.raw.y);
}

TEST_CASE("exponential model") {
  const auto s = expgamma_sample(2000, 3, 5);
  CHECK(s.true_mi == doctest::Approx(3 * kEulerGamma));
  CHECK(nats_to_bits(expgamma_sample(10, 1, 1).true_mi) == doctest::Approx(0.8328).epsilon(1e-4));
  // h(Gamma(2,1)) - h(Exp(1)) by direct integration.
  const double hg = simpson_entropy([](double y) { return y * std::exp(-y); }, 0.0, 60.0, 200000);
  const double he = simpson_entropy([](double y) { return std::exp(-y); }, 0.0, 60.0, 200000);
  CHECK(hg - he == doctest::Approx(kEulerGamma).epsilon(1e-6));

  CHECK((s.rotation_x.transpose() * s.rotation_x - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix mirrored = s.raw.y.unaryExpr([](double t) { return mirror_transform(t, 0.0, 2.0); });
  CHECK(covariance(s.samples.y).determinant() == doctest::Approx(covariance(mirrored).determinant()).epsilon(1e-6));
  ModelSpec spec;
  spec.family = ModelFamily::ExpGamma;
  spec.d = 3;
  const auto back = unscramble(spec, s);
  CHECK((back.x - s.raw.x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.y - s.raw.y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(expgamma_sample(5, 1, 1).rotation_x(0, 0) == 1.0);
}

TEST_CASE("multivariate mixture model") {
  const auto a = gm_mv_sample(500, 1, 10.0, 0.1, 9);
  const auto b = gm1d_sample(500, 10.0, 0.1, 9);
  CHECK(a.samples.x == b.samples.x);
  CHECK(a.samples.y == b.samples.y);
  CHECK(std::abs(nats_to_bits(gm_mv_sample(10, 2, 10.0, 0.1, 1).true_mi) - 3.32) <= 0.04);
  const auto c = gm_mv_sample(20000, 2, 10.0, 0.1, 4);
  Vector b0(20000), b1(20000);
  for (Eigen::Index i = 0; i < 20000; ++i) {
    b0[i] = c.branch[static_cast<std::size_t>(2 * i)];
    b1[i] = c.branch[static_cast<std::size_t>(2 * i + 1)];
  }
  CHECK(std::abs(correlation(b0, b1)) <= 3.0 / std::sqrt(20000.0));
}

TEST_CASE("samplers are reproducible") {
  for (auto fam : {ModelFamily::Gm1d, ModelFamily::MvgScramble, ModelFamily::ExpGamma, ModelFamily::GmMv}) {
    ModelSpec spec;
    spec.family = fam;
    spec.d = 2;
    const auto a = sample_model(spec, 300, 77);
    const auto b = sample_model(spec, 300, 77);
    CHECK(a.samples.x == b.samples.x);
    CHECK(a.samples.y == b.samples.y);
  }
  const auto g = sample_model(ModelSpec::gaussian_pair(0.6), 50000, 3);
  CHECK(correlation(g.samples.x.col(0), g.samples.y.col(0)) == doctest::Approx(0.6).epsilon(0.02));
  CHECK(g.true_mi == doctest::Approx(-0.5 * std::log(1 - 0.36)));
  CHECK_THROWS_AS(parse_family("nope"), ParameterError);
  ModelSpec bad;
  bad.family = ModelFamily::MvgScramble;
  bad.d = 11;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}
