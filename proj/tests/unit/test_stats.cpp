#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "gaussbound/stats.hpp"

using namespace gaussbound;

namespace {

// Independent oracle: bisection on the erfc-based normal CDF.
double bisect_quantile(double p) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

Vector normal_sample(Eigen::Index n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> d(mean, sd);
  Vector v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<double> sorted(const Vector& v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

TEST_CASE("normal_quantile matches bisection oracle") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(std::abs(normal_quantile(0.0013499) + 3.0) < 1e-3);
  for (double p : {1e-12, 1e-8, 1e-4, 0.01, 0.02425, 0.1, 0.3, 0.7, 0.9, 0.97575, 0.999, 1 - 1e-6}) {
    CHECK(std::abs(normal_quantile(p) - bisect_quantile(p)) < 1e-9);
  }
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(-0.2), DomainError);
}

TEST_CASE("empirical cdf") {
  Vector v(4);
  v << 3, 1, 2, 2;
  EmpiricalCdf f(v);
  CHECK(f(0.0) == 0.0);
  CHECK(f(2.0) == 0.75);
  CHECK(f(10.0) == 1.0);
  CHECK_THROWS_AS(EmpiricalCdf(Vector::Ones(1)), InsufficientDataError);
}

TEST_CASE("marginal_gaussianize rank formula") {
  Vector x(3);
  x << 7.0, -100.0, 3.5;
  auto g = marginal_gaussianize(x, 1);
  const auto s = sorted(g.values);
  CHECK(s[0] == doctest::Approx(bisect_quantile(1.0 / 6)).epsilon(1e-9));
  CHECK(s[1] == 0.0);
  CHECK(s[2] == doctest::Approx(bisect_quantile(5.0 / 6)).epsilon(1e-9));
  CHECK(g.values[1] < g.values[2]);
  CHECK(g.values[2] < g.values[0]);
  CHECK_THROWS_AS(marginal_gaussianize(Vector::Ones(1), 1), InsufficientDataError);
}

TEST_CASE("marginal_gaussianize on normal input passes KS") {
  const Eigen::Index n = 10000;
  auto g = marginal_gaussianize(normal_sample(n, 3), 9);
  CHECK(ks_normal(g.values) <= 1.36 / std::sqrt(double(n)) * 1.5);
  CHECK(std::abs(g.values.mean()) <= 3.0 / std::sqrt(double(n)));
  const double var = (g.values.array() - g.values.mean()).square().mean();
  CHECK(var > 0.8);
  CHECK(var < 1.2);
}

TEST_CASE("marginal_gaussianize of all ties is a permutation of the grid") {
  const Vector x = Vector::Constant(100, 4.2);
  auto a = marginal_gaussianize(x, 11);
  auto b = marginal_gaussianize(x, 11);
  auto c = marginal_gaussianize(x, 12);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  const auto s = sorted(a.values);
  const auto& grid = normal_scores(100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(s[i] == grid[i]);
}

TEST_CASE("rank exactness and monotone invariance") {
  const Vector x = normal_sample(500, 5);
  auto g = marginal_gaussianize(x, 1);
  const auto s = sorted(g.values);
  const auto& grid = normal_scores(500);
  bool exact = true;
  for (std::size_t i = 0; i < 500; ++i) exact = exact && (s[i] == grid[i]);
  CHECK(exact);
  const Vector gx = x.array().exp() * 3.0 + x.array().pow(3);
  auto h = marginal_gaussianize(gx, 2);
  CHECK(h.values == g.values);
}

TEST_CASE("monotone map and inverse") {
  Vector x = normal_sample(200, 8);
  auto g = marginal_gaussianize(x, 1);
  const auto inv = g.map.inverse();
  for (std::size_t i = 0; i < g.map.knots_in().size(); ++i) {
    CHECK(std::abs(inv(g.map(g.map.knots_in()[i])) - g.map.knots_in()[i]) < 1e-10);
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(g.map(x[i]) == doctest::Approx(g.values[i]));
  MonotoneMap clamp({0.0, 1.0}, {0.0, 2.0}, Extrapolation::Clamp);
  MonotoneMap tail({0.0, 1.0}, {0.0, 2.0}, Extrapolation::LinearTail);
  CHECK(clamp(5.0) == 2.0);
  CHECK(tail(5.0) == 10.0);
  CHECK(tail(0.25) == 0.5);
  CHECK_THROWS_AS(MonotoneMap({0.0, 0.0}, {0.0, 1.0}), ParameterError);
}

TEST_CASE("covariance") {
  Matrix two(2, 2);
  two << 0, 0, 2, 0;
  const Matrix c = covariance(two);
  CHECK(c(0, 0) == 2.0);
  CHECK(c(0, 1) == 0.0);
  CHECK(c(1, 1) == 0.0);
  CHECK(covariance(3.0 * two)(0, 0) == doctest::Approx(18.0));
  CHECK_THROWS_AS(covariance(Matrix::Zero(1, 2)), InsufficientDataError);

  Rng rng(4);
  std::normal_distribution<double> nd;
  Matrix big(100000, 3);
  for (Eigen::Index i = 0; i < big.size(); ++i) big.data()[i] = nd(rng);
  const Matrix cb = covariance(big);
  CHECK((cb - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("gaussian_mi_bound values") {
  auto scalar = [](double rho) {
    CovarianceBlocks b{Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Constant(1, 1, rho)};
    return gaussian_mi_bound(b);
  };
  CHECK(scalar(0.0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(nats_to_bits(scalar(0.703)) == doctest::Approx(0.4917).epsilon(2e-4));
  CHECK(scalar(0.703) == doctest::Approx(0.3408).epsilon(2e-4));
  CovarianceBlocks two{Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                       0.5 * Matrix::Identity(2, 2)};
  CHECK(gaussian_mi_bound(two) == doctest::Approx(-std::log(0.75)).epsilon(1e-8));
  CovarianceBlocks bad{Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Constant(1, 1, 1.5)};
  CHECK_THROWS_AS(gaussian_mi_bound(bad), InvalidCovarianceError);
}

TEST_CASE("gaussian_mi_bound nonnegative and linearly invariant") {
  Rng rng(21);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m(5, 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    const Matrix joint = m * m.transpose() + 0.1 * Matrix::Identity(5, 5);
    CovarianceBlocks b{joint.topLeftCorner(2, 2), joint.bottomRightCorner(3, 3),
                       joint.topRightCorner(2, 3)};
    const double i0 = gaussian_mi_bound(b);
    CHECK(i0 >= 0.0);
    Matrix a = Matrix::Identity(2, 2);
    Matrix c = Matrix::Identity(3, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] += 0.4 * nd(rng);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] += 0.4 * nd(rng);
    CovarianceBlocks t{a * b.cu * a.transpose(), c * b.cv * c.transpose(),
                       a * b.cuv * c.transpose()};
    CHECK(std::abs(gaussian_mi_bound(t) - i0) < 1e-8);
    const Vector rho = canonical_correlations(b);
    CHECK(std::abs(-0.5 * (1.0 - rho.array().square()).log().sum() - i0) < 1e-8);
    CovarianceBlocks indep{b.cu, b.cv, Matrix::Zero(2, 3)};
    CHECK(gaussian_mi_bound(indep) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("w2_to_normal") {
  const auto& grid = normal_scores(1000);
  Vector exact(1000);
  for (int i = 0; i < 1000; ++i) exact[i] = grid[i];
  CHECK(w2_to_normal(exact) == 0.0);
  CHECK(w2_to_normal(normal_sample(10000, 1, 0.7)) == doctest::Approx(0.49).epsilon(0.05 / 0.49));
  CHECK(std::abs(w2_to_normal(normal_sample(10000, 2, 0.0, 1.8)) - 0.64) < 0.05);
}

TEST_CASE("random rotation is special orthogonal") {
  Rng rng(3);
  for (Eigen::Index d : {1, 2, 3, 7}) {
    const Matrix r = random_rotation(d, rng);
    CHECK((r.transpose() * r - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0));
  }
}

TEST_CASE("distance correlation and binned MI") {
  const Vector a = normal_sample(2000, 1);
  const Vector b = normal_sample(2000, 2);
  CHECK(distance_correlation(a, b) < 0.1);
  CHECK(distance_correlation(a, a) == doctest::Approx(1.0));
  CHECK(binned_mutual_information(a, b, 10) < 0.05);
  CHECK(binned_mutual_information(a, a, 10) == doctest::Approx(std::log(10.0)));
}
