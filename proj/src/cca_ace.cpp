#include "gaussbound/cca_ace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaussbound/stats.hpp"

namespace gaussbound {

bool orthonormalize_against(Vector& v, const Matrix& basis, Eigen::Index count) {
  const double n = static_cast<double>(v.size());
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < count; ++j) {
      v -= (basis.col(j).dot(v) / n) * basis.col(j);
    }
  }
  return standardize(v);
}

namespace {

// Standardized j-th principal component scores of the block.
Vector principal_component(const Matrix& block, Eigen::Index j) {
  const Matrix c = covariance(block);
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  const Eigen::Index col = block.cols() - 1 - std::min(j, block.cols() - 1);
  Vector w = es.eigenvectors().col(col);
  Eigen::Index lead = 0;
  w.cwiseAbs().maxCoeff(&lead);
  if (w[lead] < 0.0) w = -w;
  Vector s = (block.rowwise() - block.colwise().mean()) * w;
  return s;
}

}  // namespace

CanonicalModel ace_fit(const PairedSamples& samples, const AceOptions& options) {
  samples.validate();
  const Eigen::Index n = samples.n();
  if (n < 50) throw InsufficientDataError("ace_fit needs n >= 50, got " + std::to_string(n));
  const Eigen::Index k = options.k > 0 ? options.k : std::min(samples.dx(), samples.dy());
  if (k < 1) throw ParameterError("ace_fit: k must be >= 1");
  if (options.tol <= 0.0 || options.max_iter < 1) throw ParameterError("ace_fit: tol > 0 and max_iter >= 1 required");

  const ConditionalMean sx(samples.x, options.smoother);
  const ConditionalMean sy(samples.y, options.smoother);
  Rng rng(derive_seed(options.seed, 0x41ce));
  std::normal_distribution<double> normal;

  CanonicalModel model;
  model.u = Matrix::Zero(n, k);
  model.v = Matrix::Zero(n, k);
  model.rho = Vector::Zero(k);
  model.u_source = Matrix::Zero(n, k);

  for (Eigen::Index j = 0; j < k; ++j) {
    Vector psi;
    if (options.random_init) {
      Vector w(samples.dy());
      for (auto& c : w) c = normal(rng);
      psi = (samples.y.rowwise() - samples.y.colwise().mean()) * w;
    } else {
      psi = principal_component(samples.y, j);
    }
    if (!orthonormalize_against(psi, model.v, j)) {
      for (auto& c : psi) c = normal(rng);
      orthonormalize_against(psi, model.v, j);
    }

    std::vector<double> trace;
    Vector best_phi = Vector::Zero(n);
    Vector best_psi = psi;
    Vector best_source = Vector::Zero(n);
    double best = -2.0;
    bool converged = false;
    int it = 0;
    for (; it < options.max_iter; ++it) {
      Vector phi = sx(psi);
      if (!orthonormalize_against(phi, model.u, j)) break;
      Vector next = sy(phi);
      if (!orthonormalize_against(next, model.v, j)) break;
      const double rho = phi.dot(next) / static_cast<double>(n);
      if (rho < best) {
        converged = true;  // objective stopped increasing; keep the previous iterate
        break;
      }
      trace.push_back(rho);
      const double gain = rho - best;
      best = rho;
      best_source = psi;
      best_phi = std::move(phi);
      best_psi = next;
      psi = std::move(next);
      if (gain < options.tol) {
        converged = true;
        ++it;
        break;
      }
    }
    if (trace.empty()) {
      // X carries no signal for this pair: keep an orthonormal placeholder.
      best_phi = principal_component(samples.x, j);
      if (!orthonormalize_against(best_phi, model.u, j)) {
        for (auto& c : best_phi) c = normal(rng);
        orthonormalize_against(best_phi, model.u, j);
      }
      best = 0.0;
      converged = true;
    }
    model.u.col(j) = best_phi;
    model.v.col(j) = best_psi;
    model.u_source.col(j) = best_source;
    model.rho[j] = std::clamp(best, 0.0, 1.0);
    model.trace.push_back(std::move(trace));
    model.converged.push_back(converged);
    model.iterations.push_back(it);
  }

  // Order pairs by correlation.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return model.rho[a] > model.rho[b]; });
  CanonicalModel sorted = model;
  for (Eigen::Index t = 0; t < k; ++t) {
    const auto s = idx[static_cast<std::size_t>(t)];
    sorted.u.col(t) = model.u.col(s);
    sorted.v.col(t) = model.v.col(s);
    sorted.u_source.col(t) = model.u_source.col(s);
    sorted.rho[t] = model.rho[s];
    sorted.trace[static_cast<std::size_t>(t)] = model.trace[static_cast<std::size_t>(s)];
    sorted.converged[static_cast<std::size_t>(t)] = model.converged[static_cast<std::size_t>(s)];
    sorted.iterations[static_cast<std::size_t>(t)] = model.iterations[static_cast<std::size_t>(s)];
  }
  return sorted;
}

BoundValue ace_upper_bound(const Vector& rho) {
  BoundValue out;
  constexpr double cap = 1.0 - 1e-12;
  for (const double r : rho) {
    double a = std::abs(r);
    if (a >= cap) {
      a = cap;
      out.saturated = true;
    }
    out.nats -= 0.5 * std::log1p(-a * a);
  }
  return out;
}

namespace {

double median_distance(const Matrix& x) {
  const Eigen::Index m = std::min<Eigen::Index>(x.rows(), 1000);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) d.push_back((x.row(i) - x.row(j)).norm());
  }
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

// Pivoted incomplete Cholesky of the Gaussian kernel matrix: K ~ G G^T.
Matrix incomplete_cholesky(const Matrix& x, double width, int max_rank) {
  const Eigen::Index n = x.rows();
  const Eigen::Index m = std::min<Eigen::Index>(max_rank, n);
  const double inv = 1.0 / (2.0 * width * width);
  Matrix g = Matrix::Zero(n, m);
  Vector resid = Vector::Ones(n);
  Eigen::Index rank = 0;
  const double stop = 1e-8 * static_cast<double>(n);
  for (; rank < m; ++rank) {
    if (resid.sum() < stop) break;
    Eigen::Index piv = 0;
    const double dmax = resid.maxCoeff(&piv);
    if (dmax <= 1e-12) break;
    Vector col(n);
    for (Eigen::Index i = 0; i < n; ++i) col[i] = std::exp(-(x.row(i) - x.row(piv)).squaredNorm() * inv);
    if (rank > 0) col.noalias() -= g.leftCols(rank) * g.row(piv).head(rank).transpose();
    col /= std::sqrt(dmax);
    g.col(rank) = col;
    resid -= col.cwiseAbs2();
    resid = resid.cwiseMax(0.0);
  }
  return g.leftCols(rank);
}

struct KernelFeatures {
  Matrix f;   // n x m, orthogonal columns
  Vector s;   // column energies f^T f / n
};

KernelFeatures kernel_features(const Matrix& x, double width, int max_rank) {
  Matrix g = incomplete_cholesky(x, width, max_rank);
  g.rowwise() -= g.colwise().mean();
  const Matrix gram = g.transpose() * g;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
    if (es.eigenvalues()[i] > 1e-12 * top && top > 0.0) keep.push_back(i);
  }
  KernelFeatures out;
  const auto m = static_cast<Eigen::Index>(keep.size());
  out.f = Matrix(x.rows(), m);
  out.s = Vector(m);
  for (Eigen::Index t = 0; t < m; ++t) {
    out.f.col(t) = g * es.eigenvectors().col(keep[static_cast<std::size_t>(t)]);
    out.s[t] = es.eigenvalues()[keep[static_cast<std::size_t>(t)]] / static_cast<double>(x.rows());
  }
  return out;
}

}  // namespace

CanonicalModel kcca_fit(const PairedSamples& samples, const KccaOptions& options) {
  samples.validate();
  const Eigen::Index n = samples.n();
  if (n < 10) throw InsufficientDataError("kcca_fit needs n >= 10");
  if (!(options.ridge > 0.0)) throw ParameterError("kcca_fit: ridge must be > 0");
  if (options.k < 1) throw ParameterError("kcca_fit: k must be >= 1");

  const double wx = options.width > 0.0 ? options.width : median_distance(samples.x);
  const double wy = options.width > 0.0 ? options.width : median_distance(samples.y);
  const auto fx = kernel_features(samples.x, wx, options.max_rank);
  const auto fy = kernel_features(samples.y, wy, options.max_rank);
  if (fx.f.cols() == 0 || fy.f.cols() == 0) throw ConditioningError("kcca_fit: kernel matrix is numerically zero");
  const Eigen::Index k = std::min<Eigen::Index>({options.k, fx.f.cols(), fy.f.cols()});
  const Matrix cross = fx.f.transpose() * fy.f / static_cast<double>(n);

  double ridge = options.ridge;
  for (int attempt = 0; attempt <= 3; ++attempt, ridge *= 10.0) {
    const Vector ax = (fx.s.array() + ridge).rsqrt();
    const Vector ay = (fy.s.array() + ridge).rsqrt();
    const Matrix mm = ax.asDiagonal() * cross * ay.asDiagonal();
    if (!mm.allFinite()) continue;
    Eigen::BDCSVD<Matrix> svd(mm, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success || svd.singularValues()[0] > 1.0 + 1e-6) continue;

    CanonicalModel model;
    model.u = Matrix::Zero(n, k);
    model.v = Matrix::Zero(n, k);
    model.rho = Vector::Zero(k);
    bool ok = true;
    for (Eigen::Index j = 0; j < k && ok; ++j) {
      Vector u = fx.f * (ax.asDiagonal() * svd.matrixU().col(j));
      Vector v = fy.f * (ay.asDiagonal() * svd.matrixV().col(j));
      ok = orthonormalize_against(u, model.u, j) && orthonormalize_against(v, model.v, j);
      double r = u.dot(v) / static_cast<double>(n);
      if (r < 0.0) {
        v = -v;
        r = -r;
      }
      model.u.col(j) = u;
      model.v.col(j) = v;
      model.rho[j] = std::min(r, 1.0);
      model.trace.push_back({r});
      model.converged.push_back(true);
      model.iterations.push_back(1);
    }
    if (!ok) continue;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return model.rho[a] > model.rho[b]; });
    CanonicalModel sorted = model;
    for (Eigen::Index t = 0; t < k; ++t) {
      sorted.u.col(t) = model.u.col(idx[static_cast<std::size_t>(t)]);
      sorted.v.col(t) = model.v.col(idx[static_cast<std::size_t>(t)]);
      sorted.rho[t] = model.rho[idx[static_cast<std::size_t>(t)]];
    }
    return sorted;
  }
  throw ConditioningError("kcca_fit: regularized system stayed singular after raising the ridge to " +
                          std::to_string(ridge / 10.0));
}

}  // namespace gaussbound
