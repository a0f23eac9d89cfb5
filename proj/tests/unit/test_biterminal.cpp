#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "gaussbound/biterminal.hpp"
#include "gaussbound/cca_ace.hpp"
#include "gaussbound/models.hpp"

using namespace gaussbound;

namespace {

bool rank_exact(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    std::vector<double> s(m.col(j).data(), m.col(j).data() + m.rows());
    std::sort(s.begin(), s.end());
    if (s != normal_scores(s.size())) return false;
  }
  return true;
}

void check_orthogonal(const GaussianizeChain& chain) {
  for (const auto& layer : chain.layers) {
    const auto d = layer.rotation.rows();
    CHECK((layer.rotation.transpose() * layer.rotation - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

Matrix normal_block(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Matrix m(n, d);
  for (auto& v : m.reshaped()) v = nd(rng);
  return m;
}

}  // namespace

TEST_CASE("separate Gaussianization of Gaussian data stops after one layer") {
  const auto r = separate_gaussianize(normal_block(10000, 2, 1), {}, 3);
  CHECK(r.chain.converged);
  CHECK(r.chain.layers.size() == 1);
  CHECK(rank_exact(r.block));
  check_orthogonal(r.chain);
}

TEST_CASE("separate Gaussianization in one dimension is marginal Gaussianization") {
  const Matrix x = normal_block(300, 1, 2).array().exp();
  SeparateOptions o;
  o.max_layers = 7;
  o.normality_tol = 0.0;
  const auto r = separate_gaussianize(x, o, 9);
  CHECK(r.block.col(0) == marginal_gaussianize(x.col(0), 9).values);
}

TEST_CASE("separate Gaussianization of the uniform square") {
  Rng rng(5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix b(10000, 2);
  for (auto& v : b.reshaped()) v = uni(rng);
  SeparateOptions o;
  o.max_layers = 50;
  o.normality_tol = 0.0;
  const auto r = separate_gaussianize(b, o, 5);
  const auto& t = r.chain.objective_trace;
  REQUIRE(t.size() == 50);
  // Plug-in binned MI fluctuates by ~0.02 nats at this n.
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] <= t[i - 1] + 0.025);
  CHECK(t.back() < 0.5 * *std::max_element(t.begin(), t.end()));
  CHECK(rank_exact(r.block));
  check_orthogonal(r.chain);
  CHECK((r.chain.apply(b) - r.block).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("joint objective") {
  const Matrix u = normal_block(10000, 2, 7);
  const Matrix v = normal_block(10000, 2, 8);
  CHECK(joint_objective(u, v).nats <= 0.02);
  CHECK_FALSE(joint_objective(u, v).saturated);

  const Matrix w = normal_block(500, 1, 9);
  const auto same = joint_objective(w, w);
  CHECK(same.saturated);
  CHECK(std::isfinite(same.nats));

  Rng rng(3);
  const Matrix rot = random_rotation(2, rng);
  Matrix vv = v;
  vv.col(0) += 0.5 * u.col(1);
  CHECK(std::abs(joint_objective(u * rot.transpose(), vv).nats - joint_objective(u, vv).nats) <= 1e-8);

  const auto s = gm1d_sample(2000, 10.0, 0.1, 4);
  const auto ace = ace_fit(s.samples);
  CHECK(std::abs(joint_objective(ace.u, ace.v).nats - ace_upper_bound(ace).nats) <= 1e-6);
  CHECK_THROWS_AS(joint_objective(u.topRows(3), v.topRows(3)), InsufficientDataError);
}

TEST_CASE("bi-terminal Gaussianization of Gaussian data") {
  Matrix u = normal_block(10000, 2, 11);
  Matrix v = 0.6 * u + 0.8 * normal_block(10000, 2, 12);
  const double before = joint_objective(u, v).nats;
  BiterminalOptions o;
  o.outer_iters = 5;
  o.inner_tries = 10;
  const auto r = biterminal_gaussianize(u, v, o, 1);
  CHECK(std::abs(joint_objective(r.u, r.v).nats - before) <= 0.05);
  CHECK(rank_exact(r.u));
  CHECK(rank_exact(r.v));
  check_orthogonal(r.chain_u);
  check_orthogonal(r.chain_v);
  for (const auto& acc : r.accepted) {
    for (std::size_t i = 1; i < acc.size(); ++i) CHECK(acc[i] > acc[i - 1]);
  }
}

TEST_CASE("bi-terminal without hill climbing is separate Gaussianization") {
  const auto s = expgamma_sample(1000, 2, 3);
  BiterminalOptions o;
  o.outer_iters = 3;
  o.inner_tries = 0;
  o.normality_tol = 0.0;
  const auto r = biterminal_gaussianize(s.samples.x, s.samples.y, o, 21);
  SeparateOptions so;
  so.max_layers = static_cast<int>(r.chain_u.layers.size());
  so.normality_tol = 0.0;
  const auto su = separate_gaussianize(s.samples.x, so, derive_seed(21, 0));
  const auto sv = separate_gaussianize(s.samples.y, so, derive_seed(21, 1));
  CHECK(r.u == su.block);
  CHECK(r.v == sv.block);
  for (std::size_t l = 0; l < su.chain.layers.size(); ++l) {
    CHECK(r.chain_u.layers[l].rotation == su.chain.layers[l].rotation);
    CHECK(r.chain_v.layers[l].rotation == sv.chain.layers[l].rotation);
  }
  for (const auto& acc : r.accepted) CHECK(acc.size() == 1);
}

TEST_CASE("bi-terminal beats separate Gaussianization on the exponential model") {
  const auto s = expgamma_sample(4000, 2, 2);
  const auto ace = ace_fit(s.samples);
  const auto su = separate_gaussianize(ace.u, {}, derive_seed(2, 0));
  const auto sv = separate_gaussianize(ace.v, {}, derive_seed(2, 1));
  BiterminalOptions o;
  o.outer_iters = 10;
  const auto r = biterminal_gaussianize(ace.u, ace.v, o, 2);
  CHECK(joint_objective(r.u, r.v).nats >= joint_objective(su.block, sv.block).nats);
  CHECK(joint_objective(r.u, r.v).nats <= ace_upper_bound(ace).nats + 0.05);
  CHECK(rank_exact(r.u));
  CHECK(rank_exact(r.v));
}

TEST_CASE("bi-terminal preconditions") {
  CHECK_THROWS_AS(biterminal_gaussianize(normal_block(50, 2, 1), normal_block(50, 2, 2)), InsufficientDataError);
  CHECK_THROWS_AS(biterminal_gaussianize(normal_block(200, 2, 1), normal_block(201, 2, 2)), ParameterError);
  CHECK_THROWS_AS(separate_gaussianize(normal_block(50, 2, 1)), InsufficientDataError);
}
