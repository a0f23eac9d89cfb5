#include "gaussbound/agce.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "gaussbound/cca_ace.hpp"

namespace gaussbound {

Vector FittedTransform::operator()(const Matrix& x_new) const {
  if (linear.size() > 0) {
    if (x_new.cols() != linear.size()) throw ParameterError("transform: dimension mismatch");
    return map(Vector(x_new * linear));
  }
  if (!smoother) throw ParameterError("transform: not fitted");
  if (x_new.cols() != smoother->x().cols()) throw ParameterError("transform: dimension mismatch");
  return map(smoother->predict(x_new, target));
}

AgceStep agce_step(VectorRef fixed, const ConditionalMean& smoother, std::uint64_t seed, const Vector* previous) {
  AgceStep out;
  out.conditional_mean = smoother(fixed);
  const auto& cm = out.conditional_mean;
  const double lo = cm.minCoeff();
  const double hi = cm.maxCoeff();
  auto g = marginal_gaussianize(cm, seed);
  out.values = std::move(g.values);
  out.map = std::move(g.map);
  out.independent_fit = !(hi - lo > 1e-12 * std::max(1.0, std::abs(hi) + std::abs(lo)));
  out.transport_loss = (out.values - cm).squaredNorm() / static_cast<double>(cm.size());
  if (previous && !out.independent_fit && correlation(out.values, fixed) < correlation(*previous, fixed)) {
    out.values = *previous;
    out.kept_previous = true;
  }
  return out;
}

AgceStep agce_step(VectorRef fixed, const Matrix& x_block, const SmootherConfig& config, std::uint64_t seed,
                   const Vector* previous) {
  return agce_step(fixed, ConditionalMean(x_block, config), seed, previous);
}

namespace {

void check_1d(const PairedSamples& samples, const char* who) {
  samples.validate();
  if (samples.dx() != 1 || samples.dy() != 1) throw ParameterError(std::string(who) + " needs d_x = d_y = 1");
  if (samples.n() < 100) throw InsufficientDataError(std::string(who) + " needs n >= 100");
}

using SmootherPtr = std::shared_ptr<const ConditionalMean>;

struct Init {
  Vector phi;  // empty if only psi is given
  MonotoneMap phi_map;
  Vector phi_target;
  Vector psi;
  MonotoneMap psi_map;
  Vector psi_target;
};

AgcePair run_restart(const SmootherPtr& sx, const SmootherPtr& sy, Init init, const AgceOptions& opt,
                     std::uint64_t seed) {
  AgcePair pair;
  pair.phi.smoother = sx;
  pair.psi.smoother = sy;
  pair.psi.target = std::move(init.psi_target);
  pair.psi.map = std::move(init.psi_map);
  Vector psi = std::move(init.psi);
  Vector phi;
  double best = -std::numeric_limits<double>::infinity();
  if (init.phi.size() > 0) {
    phi = std::move(init.phi);
    pair.phi.target = std::move(init.phi_target);
    pair.phi.map = std::move(init.phi_map);
    best = correlation(phi, psi);
    pair.trace.push_back(best);
  }

  for (int it = 0; it < opt.max_iter; ++it) {
    const double start = best;
    auto sx_step = agce_step(psi, *sx, derive_seed(seed, 2 * static_cast<std::uint64_t>(it)));
    if (sx_step.independent_fit) {
      pair.independent_fit = true;
      break;
    }
    const double ra = correlation(sx_step.values, psi);
    if (ra < best) {
      pair.converged = true;
      break;
    }
    best = ra;
    pair.phi.target = psi;
    pair.phi.map = std::move(sx_step.map);
    pair.transport_loss_x = sx_step.transport_loss;
    phi = std::move(sx_step.values);

    auto sy_step = agce_step(phi, *sy, derive_seed(seed, 2 * static_cast<std::uint64_t>(it) + 1));
    if (sy_step.independent_fit) {
      pair.independent_fit = true;
      pair.trace.push_back(best);
      break;
    }
    const double rb = correlation(phi, sy_step.values);
    if (rb >= best) {
      best = rb;
      pair.psi.target = phi;
      pair.psi.map = std::move(sy_step.map);
      pair.transport_loss_y = sy_step.transport_loss;
      psi = std::move(sy_step.values);
    }
    pair.trace.push_back(best);
    if (rb < ra || best - start < opt.tol) {
      pair.converged = true;
      break;
    }
  }
  if (pair.independent_fit || phi.size() == 0) {
    pair.independent_fit = true;
    pair.rho = 0.0;
    if (phi.size() == 0) phi = Vector::Zero(psi.size());
  } else {
    pair.rho = std::max(best, 0.0);
  }
  pair.u = std::move(phi);
  pair.v = std::move(psi);
  return pair;
}

Vector random_cubic(VectorRef y, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  double c[4];
  for (double& ci : c) ci = normal(rng);
  Vector t = y;
  if (!standardize(t)) return t;
  return (c[0] + t.array() * (c[1] + t.array() * (c[2] + t.array() * c[3]))).matrix();
}

}  // namespace

AgcePair offshelf_lower_1d(const PairedSamples& samples, const SmootherConfig& smoother, std::uint64_t seed,
                           double ace_tol) {
  check_1d(samples, "offshelf_lower_1d");
  AceOptions ao;
  ao.k = 1;
  ao.smoother = smoother;
  ao.tol = ace_tol;
  const auto ace = ace_fit(samples, ao);
  auto sx = std::make_shared<const ConditionalMean>(samples.x, smoother);
  auto sy = std::make_shared<const ConditionalMean>(samples.y, smoother);

  AgcePair pair;
  // u and v are increasing affine images of E[u_source | X] and E[u | Y].
  auto gu = marginal_gaussianize((*sx)(ace.u_source.col(0)), derive_seed(seed, 11));
  auto gv = marginal_gaussianize((*sy)(ace.u.col(0)), derive_seed(seed, 12));
  pair.phi = {sx, ace.u_source.col(0), Vector(), std::move(gu.map)};
  pair.psi = {sy, ace.u.col(0), Vector(), std::move(gv.map)};
  pair.u = std::move(gu.values);
  pair.v = std::move(gv.values);
  pair.rho = std::max(correlation(pair.u, pair.v), 0.0);
  pair.trace = {pair.rho};
  pair.restarts_used = 1;
  pair.restart_rho = {pair.rho};
  pair.converged = ace.converged[0];
  pair.independent_fit = ace.trace[0].empty();
  return pair;
}

AgcePair naive_gaussianize_1d(const PairedSamples& samples, std::uint64_t seed) {
  samples.validate();
  if (samples.dx() != 1 || samples.dy() != 1) throw ParameterError("naive_gaussianize_1d needs d_x = d_y = 1");
  auto gx = marginal_gaussianize(samples.x.col(0), derive_seed(seed, 21));
  auto gy = marginal_gaussianize(samples.y.col(0), derive_seed(seed, 22));
  AgcePair pair;
  pair.phi.linear = Vector::Ones(1);
  pair.phi.map = std::move(gx.map);
  pair.psi.linear = Vector::Ones(1);
  pair.psi.map = std::move(gy.map);
  pair.u = std::move(gx.values);
  pair.v = std::move(gy.values);
  pair.rho = correlation(pair.u, pair.v);
  pair.trace = {pair.rho};
  pair.restarts_used = 1;
  pair.restart_rho = {pair.rho};
  pair.converged = true;
  return pair;
}

AgcePair agce_fit_1d(const PairedSamples& samples, const AgceOptions& options, std::uint64_t seed) {
  check_1d(samples, "agce_fit_1d");
  if (options.n_restarts < 1) throw ParameterError("agce_fit_1d: n_restarts must be >= 1");
  if (options.tol <= 0.0 || options.max_iter < 1) throw ParameterError("agce_fit_1d: tol > 0 and max_iter >= 1 required");

  auto sx = std::make_shared<const ConditionalMean>(samples.x, options.smoother);
  auto sy = std::make_shared<const ConditionalMean>(samples.y, options.smoother);

  std::vector<std::future<AgcePair>> jobs;
  for (int r = 0; r < options.n_restarts; ++r) {
    const std::uint64_t rs = derive_seed(seed, 100 + static_cast<std::uint64_t>(r));
    jobs.push_back(std::async(std::launch::async, [&, r, rs]() {
      Init init;
      if (r == 0) {
        const auto off = offshelf_lower_1d(samples, options.smoother, seed, options.ace_tol);
        init.phi = off.u;
        init.phi_map = off.phi.map;
        init.phi_target = off.phi.target;
        init.psi = off.v;
        init.psi_map = off.psi.map;
        init.psi_target = off.psi.target;
      } else {
        auto g = marginal_gaussianize(random_cubic(samples.y.col(0), rs), derive_seed(rs, 1));
        init.psi = std::move(g.values);
        init.psi_map = std::move(g.map);
        init.psi_target = samples.y.col(0);
      }
      return run_restart(sx, sy, std::move(init), options, derive_seed(rs, 2));
    }));
  }

  AgcePair best;
  std::vector<double> all;
  for (int r = 0; r < options.n_restarts; ++r) {
    auto p = jobs[static_cast<std::size_t>(r)].get();
    all.push_back(p.rho);
    if (r == 0 || p.rho > best.rho) {
      best = std::move(p);
      best.best_restart = r;
    }
  }
  best.restarts_used = options.n_restarts;
  best.restart_rho = std::move(all);
  return best;
}

namespace {

struct LinearPair {
  Vector a;
  Vector b;
  double rho = 0.0;
  std::vector<double> trace;
  bool converged = false;
  bool independent = false;
};

Vector top_eigenvector(const Matrix& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  return es.eigenvectors().col(c.rows() - 1);
}

bool normalize_in(Vector& w, const Matrix& c) {
  const double s = w.dot(c * w);
  if (!(s > 1e-24)) return false;
  w /= std::sqrt(s);
  return true;
}

// Population AGCE for a jointly Gaussian pair: E[b'Y | X] is linear in X and
// already Gaussian, so the Gaussianized projection is its standardization.
LinearPair oracle_pair(const Matrix& cx, const Matrix& cy, const Matrix& cxy, double tol, int max_iter) {
  const Eigen::LDLT<Matrix> sx(cx);
  const Eigen::LDLT<Matrix> sy(cy);
  LinearPair out;
  out.b = top_eigenvector(cy);
  normalize_in(out.b, cy);
  out.a = top_eigenvector(cx);
  normalize_in(out.a, cx);
  double best = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector a = sx.solve(cxy * out.b);
    if (!normalize_in(a, cx)) {
      out.independent = true;
      break;
    }
    Vector b = sy.solve(cxy.transpose() * a);
    if (!normalize_in(b, cy)) {
      out.independent = true;
      break;
    }
    const double rho = a.dot(cxy * b);
    out.a = std::move(a);
    out.b = std::move(b);
    out.trace.push_back(rho);
    const double gain = rho - best;
    best = rho;
    if (gain < tol) {
      out.converged = true;
      break;
    }
  }
  out.rho = out.independent ? 0.0 : std::max(best, 0.0);
  if (out.independent) out.converged = true;
  return out;
}

// Coordinates z = X T of the part of X independent of U = X a (a' C a = 1),
// whitened. Their normal CDFs are the uniform push-forward of F_{X|U}.
Matrix residual_whitener(const Matrix& c, const Vector& a) {
  const Eigen::Index d = c.rows();
  const Vector ca = c * a;
  const Matrix proj = Matrix::Identity(d, d) - a * ca.transpose();
  const Matrix s = c - ca * ca.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  const double cut = 1e-10 * std::max(s.trace(), 1e-300);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    if (es.eigenvalues()[i] > cut) keep.push_back(i);
  }
  Matrix t(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    t.col(static_cast<Eigen::Index>(j)) = proj * es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()[keep[j]]);
  }
  return t;
}

}  // namespace

OracleAgceResult agce_fit_mv_oracle(const ModelSpec& spec, int k, Eigen::Index n, std::uint64_t seed, double tol,
                                    int max_iter) {
  if (spec.family != ModelFamily::Gaussian) {
    throw UnsupportedModelError("agce_fit_mv_oracle: family '" + family_name(spec.family) +
                                "' has no analytic conditional CDFs");
  }
  spec.validate();
  const int dx = spec.x_dim();
  const int dy = spec.y_dim();
  if (k < 1 || k > 2 || k > std::min(dx, dy)) throw ParameterError("agce_fit_mv_oracle: need 1 <= k <= min(2, d_x, d_y)");

  OracleAgceResult out;
  const auto sample = sample_model(spec, n, seed);
  out.samples = sample.samples;
  const Matrix& joint = spec.joint_cov;
  const Matrix cx = joint.topLeftCorner(dx, dx);
  const Matrix cy = joint.bottomRightCorner(dy, dy);
  const Matrix cxy = joint.topRightCorner(dx, dy);
  out.analytic_rho = canonical_correlations({cx, cy, cxy});

  Matrix tx = Matrix::Identity(dx, dx);
  Matrix ty = Matrix::Identity(dy, dy);
  for (int j = 0; j < k; ++j) {
    const Matrix rcx = tx.transpose() * cx * tx;
    const Matrix rcy = ty.transpose() * cy * ty;
    const Matrix rcxy = tx.transpose() * cxy * ty;
    const auto lp = oracle_pair(rcx, rcy, rcxy, tol, max_iter);

    AgcePair pair;
    pair.phi.linear = tx * lp.a;
    pair.psi.linear = ty * lp.b;
    auto gu = marginal_gaussianize(out.samples.x * pair.phi.linear, derive_seed(seed, 31 + 2 * j));
    auto gv = marginal_gaussianize(out.samples.y * pair.psi.linear, derive_seed(seed, 32 + 2 * j));
    pair.phi.map = std::move(gu.map);
    pair.psi.map = std::move(gv.map);
    pair.u = std::move(gu.values);
    pair.v = std::move(gv.values);
    pair.rho = correlation(pair.u, pair.v);
    pair.trace = lp.trace;
    pair.converged = lp.converged;
    pair.independent_fit = lp.independent;
    pair.restarts_used = 1;
    pair.restart_rho = {pair.rho};
    out.pairs.push_back(std::move(pair));

    if (j + 1 < k) {
      tx = tx * residual_whitener(rcx, lp.a);
      ty = ty * residual_whitener(rcy, lp.b);
    }
  }
  return out;
}

}  // namespace gaussbound
