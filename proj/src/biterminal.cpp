#include "gaussbound/biterminal.hpp"

#include <algorithm>
#include <cmath>

namespace gaussbound {

Matrix GaussianizeChain::apply(const Matrix& block) const {
  Matrix z = block;
  for (const auto& layer : layers) {
    if (z.cols() != layer.rotation.cols()) throw ParameterError("chain: dimension mismatch");
    z = z * layer.rotation.transpose();
    for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j) = layer.maps[static_cast<std::size_t>(j)](z.col(j));
  }
  return z;
}

double pairwise_dependence(const Matrix& block, int bins) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < block.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < block.cols(); ++j) s += binned_mutual_information(block.col(i), block.col(j), bins);
  }
  return s;
}

namespace {

double default_tol(Eigen::Index n, double tol) {
  return tol < 0.0 ? 1.5 * 1.36 / std::sqrt(static_cast<double>(n)) : tol;
}

// Rotate, then Gaussianize every coordinate with per-column tie seeds.
Matrix rotate_gaussianize(const Matrix& z, const Matrix& rot, std::uint64_t layer_seed, std::vector<MonotoneMap>* maps) {
  Matrix out = z * rot.transpose();
  if (maps) maps->clear();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    auto g = marginal_gaussianize(out.col(j), derive_seed(layer_seed, 100 + static_cast<std::uint64_t>(j)));
    out.col(j) = g.values;
    if (maps) maps->push_back(std::move(g.map));
  }
  return out;
}

Vector probe_ks(const Matrix& z, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix p = z * random_rotation(z.cols(), rng).transpose();
  Vector ks(z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) ks[j] = ks_normal(p.col(j));
  return ks;
}

double objective_value(const Matrix& u, const Matrix& v) {
  return gaussian_mi_bound(CovarianceBlocks::from_samples(u, v));
}

}  // namespace

SeparateResult separate_gaussianize(const Matrix& block, const SeparateOptions& options, std::uint64_t seed) {
  const Eigen::Index n = block.rows();
  const Eigen::Index d = block.cols();
  if (n < 100) throw InsufficientDataError("separate_gaussianize needs n >= 100");
  if (d < 1) throw ParameterError("separate_gaussianize: empty block");
  if (options.max_layers < 1) throw ParameterError("separate_gaussianize: max_layers must be >= 1");
  const double tol = default_tol(n, options.normality_tol);

  SeparateResult out;
  if (d == 1) {
    auto g = marginal_gaussianize(block.col(0), seed);
    out.block = g.values;
    out.chain.layers.push_back({Matrix::Identity(1, 1), {std::move(g.map)}});
    out.chain.objective_trace.push_back(0.0);
    out.chain.normality_stat = Vector::Constant(1, ks_normal(out.block.col(0)));
    out.chain.converged = true;
    return out;
  }

  Matrix z = block;
  for (int l = 0; l < options.max_layers; ++l) {
    const std::uint64_t ls = derive_seed(seed, static_cast<std::uint64_t>(l));
    Rng rng(ls);
    GaussianizeLayer layer;
    layer.rotation = random_rotation(d, rng);
    z = rotate_gaussianize(z, layer.rotation, ls, &layer.maps);
    out.chain.layers.push_back(std::move(layer));
    out.chain.objective_trace.push_back(pairwise_dependence(z));
    out.chain.normality_stat = probe_ks(z, derive_seed(seed, 50000 + static_cast<std::uint64_t>(l)));
    if (out.chain.normality_stat.maxCoeff() <= tol) {
      out.chain.converged = true;
      break;
    }
  }
  out.block = std::move(z);
  return out;
}

BoundValue joint_objective(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows()) throw ParameterError("joint_objective: row mismatch");
  if (u.rows() <= u.cols() + v.cols()) throw InsufficientDataError("joint_objective needs n > d_u + d_v");
  const auto blocks = CovarianceBlocks::from_samples(u, v);
  BoundValue out;
  out.nats = gaussian_mi_bound(blocks);
  const Vector cc = canonical_correlations(blocks);
  out.saturated = cc.size() > 0 && cc[0] >= 1.0 - 1e-9;
  return out;
}

BiterminalResult biterminal_gaussianize(const Matrix& u, const Matrix& v, const BiterminalOptions& options,
                                        std::uint64_t seed) {
  const Eigen::Index n = u.rows();
  if (v.rows() != n) throw ParameterError("biterminal_gaussianize: row mismatch");
  if (n < 100) throw InsufficientDataError("biterminal_gaussianize needs n >= 100");
  if (u.cols() < 1 || v.cols() < 1) throw ParameterError("biterminal_gaussianize: empty block");
  if (options.outer_iters < 1 || options.inner_tries < 0) throw ParameterError("biterminal_gaussianize: bad iteration counts");
  const double tol = default_tol(n, options.normality_tol);

  BiterminalResult out;
  Matrix cur[2] = {u, v};
  GaussianizeChain* chains[2] = {&out.chain_u, &out.chain_v};
  const std::uint64_t side_seed[2] = {derive_seed(seed, 0), derive_seed(seed, 1)};
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  Matrix best[2];
  Vector best_stat[2];
  double best_obj = -1.0;
  std::size_t best_layers = 0;

  for (int l = 0; l < options.outer_iters; ++l) {
    for (int s = 0; s < 2; ++s) {
      const Eigen::Index d = cur[s].cols();
      const Matrix& other = cur[1 - s];
      const std::uint64_t ls = derive_seed(side_seed[s], static_cast<std::uint64_t>(l));
      Rng rng(ls);
      GaussianizeLayer layer;
      layer.rotation = random_rotation(d, rng);
      Matrix cand = rotate_gaussianize(cur[s], layer.rotation, ls, &layer.maps);
      auto eval = [&](const Matrix& c) { return s == 0 ? objective_value(c, other) : objective_value(other, c); };
      double obj = eval(cand);
      std::vector<double> acc{obj};

      if (d >= 2 && options.inner_tries > 0) {
        Rng hill(derive_seed(side_seed[s], 20000 + static_cast<std::uint64_t>(l)));
        std::uniform_int_distribution<Eigen::Index> pick(0, d - 1);
        std::vector<MonotoneMap> maps;
        for (int t = 0; t < options.inner_tries; ++t) {
          const Eigen::Index i = pick(hill);
          Eigen::Index j = pick(hill);
          while (j == i) j = pick(hill);
          const double th = angle(hill);
          Matrix g = Matrix::Identity(d, d);
          g(i, i) = g(j, j) = std::cos(th);
          g(i, j) = -std::sin(th);
          g(j, i) = std::sin(th);
          const Matrix rot = g * layer.rotation;
          Matrix next = rotate_gaussianize(cur[s], rot, ls, &maps);
          const double o = eval(next);
          if (o > obj) {
            obj = o;
            cand = std::move(next);
            layer.rotation = rot;
            layer.maps = maps;
            acc.push_back(o);
          }
        }
      }
      cur[s] = std::move(cand);
      chains[s]->layers.push_back(std::move(layer));
      chains[s]->objective_trace.push_back(obj);
      out.objective_trace.push_back(obj);
      out.accepted.push_back(std::move(acc));
    }
    bool ok = true;
    for (int s = 0; s < 2; ++s) {
      chains[s]->normality_stat = probe_ks(cur[s], derive_seed(side_seed[s], 50000 + static_cast<std::uint64_t>(l)));
      ok = ok && chains[s]->normality_stat.maxCoeff() <= tol;
    }
    if (out.objective_trace.back() > best_obj) {
      best_obj = out.objective_trace.back();
      best_layers = out.chain_u.layers.size();
      for (int s = 0; s < 2; ++s) {
        best[s] = cur[s];
        best_stat[s] = chains[s]->normality_stat;
      }
    }
    if (ok) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged && best_layers < out.chain_u.layers.size()) {
    // Budget exhausted: fall back to the best completed outer iteration.
    for (int s = 0; s < 2; ++s) {
      cur[s] = std::move(best[s]);
      chains[s]->layers.resize(best_layers);
      chains[s]->objective_trace.resize(best_layers);
      chains[s]->normality_stat = best_stat[s];
    }
  }
  out.chain_u.converged = out.chain_v.converged = out.converged;
  out.u = std::move(cur[0]);
  out.v = std::move(cur[1]);
  return out;
}

}  // namespace gaussbound
