#include "gaussbound/ib_discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace gaussbound {

namespace {

constexpr double kQFloor = 1e-300;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double xlogx_ratio(double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; }

Matrix default_labels(Eigen::Index k) {
  Matrix m(k, 1);
  for (Eigen::Index i = 0; i < k; ++i) m(i, 0) = static_cast<double>(i);
  return m;
}

}  // namespace

JointPmf JointPmf::from_matrix(Matrix p, Matrix x_nodes, Matrix y_nodes) {
  if (p.size() == 0) throw ParameterError("joint pmf: empty matrix");
  if (!p.allFinite() || p.minCoeff() < 0.0) throw ParameterError("joint pmf: entries must be finite and >= 0");
  const double total = p.sum();
  if (!(total > 0.0)) throw ParameterError("joint pmf: total mass is zero");
  p /= total;
  if (x_nodes.size() == 0) x_nodes = default_labels(p.rows());
  if (y_nodes.size() == 0) y_nodes = default_labels(p.cols());
  if (x_nodes.rows() != p.rows() || y_nodes.rows() != p.cols()) throw ParameterError("joint pmf: label count mismatch");

  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (p.row(i).sum() > 0.0) rows.push_back(i);
  }
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    if (p.col(j).sum() > 0.0) cols.push_back(j);
  }
  JointPmf out;
  out.p = p(rows, cols);
  out.x_nodes = x_nodes(rows, Eigen::all);
  out.y_nodes = y_nodes(cols, Eigen::all);
  out.p /= out.p.sum();
  return out;
}

void JointPmf::validate() const {
  if (p.size() == 0) throw ParameterError("joint pmf: empty");
  if (!p.allFinite() || p.minCoeff() < 0.0) throw ParameterError("joint pmf: entries must be finite and >= 0");
  if (std::abs(p.sum() - 1.0) > 1e-12) throw ParameterError("joint pmf: entries must sum to 1");
  if (p.rowwise().sum().minCoeff() <= 0.0) throw ParameterError("joint pmf: zero-probability x bin");
}

double discrete_mi(const JointPmf& joint) {
  joint.validate();
  const Vector px = joint.px();
  const Vector py = joint.py();
  double s = 0.0;
  for (Eigen::Index i = 0; i < joint.p.rows(); ++i) {
    for (Eigen::Index j = 0; j < joint.p.cols(); ++j) s += xlogx_ratio(joint.p(i, j), px[i] * py[j]);
  }
  return std::max(s, 0.0);
}

namespace {

struct IbState {
  Vector qt;
  Matrix qyt;
};

IbState marginals(const Matrix& q, const Matrix& p, const Vector& px, const Vector& py) {
  IbState s;
  s.qt = q.transpose() * px;
  s.qyt = q.transpose() * p;
  for (Eigen::Index t = 0; t < s.qyt.rows(); ++t) {
    if (s.qt[t] > 0.0) {
      s.qyt.row(t) /= s.qt[t];
    } else {
      s.qyt.row(t) = py.transpose();
    }
  }
  return s;
}

double info_tx(const Matrix& q, const Vector& qt, const Vector& px) {
  double s = 0.0;
  for (Eigen::Index x = 0; x < q.rows(); ++x) {
    double r = 0.0;
    for (Eigen::Index t = 0; t < q.cols(); ++t) r += xlogx_ratio(q(x, t), qt[t]);
    s += px[x] * r;
  }
  return std::max(s, 0.0);
}

double info_ty(const Matrix& qyt, const Vector& qt, const Vector& py) {
  double s = 0.0;
  for (Eigen::Index t = 0; t < qyt.rows(); ++t) {
    if (qt[t] <= 0.0) continue;
    double r = 0.0;
    for (Eigen::Index y = 0; y < qyt.cols(); ++y) r += xlogx_ratio(qyt(t, y), py[y]);
    s += qt[t] * r;
  }
  return std::max(s, 0.0);
}

}  // namespace

IBSolution ib_iterate(const JointPmf& joint, double beta, const IBSolution* init, double tol, int max_iter) {
  joint.validate();
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("ib_iterate: beta must be finite and > 0");
  if (!(tol > 0.0) || max_iter < 1) throw ParameterError("ib_iterate: tol > 0 and max_iter >= 1 required");
  const Matrix& p = joint.p;
  const Eigen::Index nx = p.rows();
  const Vector px = joint.px();
  const Vector py = joint.py();
  Matrix pyx = p;
  for (Eigen::Index x = 0; x < nx; ++x) pyx.row(x) /= px[x];
  Vector negent(nx);
  for (Eigen::Index x = 0; x < nx; ++x) {
    double s = 0.0;
    for (Eigen::Index y = 0; y < p.cols(); ++y) s += pyx(x, y) > 0.0 ? pyx(x, y) * std::log(pyx(x, y)) : 0.0;
    negent[x] = s;
  }

  Matrix q;
  if (init) {
    if (init->q_t_given_x.rows() != nx || init->q_t_given_x.cols() < 1 || init->q_t_given_x.cols() > nx) {
      throw ParameterError("ib_iterate: init must be |X| x |T| with |T| <= |X|");
    }
    q = init->q_t_given_x;
  } else {
    q = Matrix::Identity(nx, nx);
  }
  const Eigen::Index nt = q.cols();

  IBSolution sol;
  sol.beta = beta;
  IbState st = marginals(q, p, px, py);
  Vector logits(nt);
  for (int it = 1; it <= max_iter; ++it) {
    const Matrix logq = st.qyt.cwiseMax(kQFloor).array().log().matrix();
    const Matrix cross = pyx * logq.transpose();  // sum_y p(y|x) log q(y|t)
    Matrix next(nx, nt);
    for (Eigen::Index x = 0; x < nx; ++x) {
      double mx = kNegInf;
      for (Eigen::Index t = 0; t < nt; ++t) {
        logits[t] = st.qt[t] > 0.0 ? std::log(st.qt[t]) - beta * (negent[x] - cross(x, t)) : kNegInf;
        mx = std::max(mx, logits[t]);
      }
      double z = 0.0;
      for (Eigen::Index t = 0; t < nt; ++t) {
        next(x, t) = std::exp(logits[t] - mx);
        z += next(x, t);
      }
      next.row(x) /= z;
    }
    const double delta = (next - q).cwiseAbs().maxCoeff();
    q = std::move(next);
    st = marginals(q, p, px, py);
    sol.lagrangian.push_back(info_tx(q, st.qt, px) - beta * info_ty(st.qyt, st.qt, py));
    sol.iterations = it;
    if (delta < tol) {
      sol.converged = true;
      break;
    }
  }
  sol.itx = info_tx(q, st.qt, px);
  sol.ity = std::min(info_ty(st.qyt, st.qt, py), sol.itx);
  sol.q_t_given_x = std::move(q);
  sol.q_t = std::move(st.qt);
  sol.q_y_given_t = std::move(st.qyt);
  return sol;
}

std::vector<double> default_anneal_schedule(int count, double hi, double lo) {
  if (count < 1 || !(hi > 0.0) || !(lo > 0.0) || (count > 1 && !(hi > lo))) {
    throw ParameterError("anneal schedule: need count >= 1 and hi > lo > 0");
  }
  std::vector<double> s(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    s[static_cast<std::size_t>(i)] = std::exp(std::log(hi) + t * (std::log(lo) - std::log(hi)));
  }
  return s;
}

IBCurve reverse_anneal(const JointPmf& joint, const std::vector<double>& schedule, double tol, int max_iter) {
  if (schedule.empty()) throw ParameterError("reverse_anneal: empty schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i] < schedule[i - 1])) throw ParameterError("reverse_anneal: schedule must be strictly descending");
  }
  IBCurve curve;
  IBSolution prev;
  bool have_prev = false;
  for (const double beta : schedule) {
    IBSolution s = ib_iterate(joint, beta, have_prev ? &prev : nullptr, tol, max_iter);
    curve.points.push_back({beta, s.itx, s.ity});
    curve.converged.push_back(s.converged);
    prev = std::move(s);
    have_prev = true;
  }
  std::reverse(curve.points.begin(), curve.points.end());
  std::reverse(curve.converged.begin(), curve.converged.end());
  if (!check_curve(curve, 1e-6).concave) {
    curve.raw = curve.points;
    curve.points = concave_envelope(curve.points);
  }
  return curve;
}

void gauss_hermite(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  if (m < 1) throw ParameterError("gauss_hermite: m >= 1 required");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Matrix j = Matrix::Zero(m, m);
  for (int k = 1; k < m; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Matrix> es(j);
  nodes.resize(static_cast<std::size_t>(m));
  weights.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    nodes[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
    const double v = es.eigenvectors()(0, k);
    weights[static_cast<std::size_t>(k)] = v * v;
  }
  const double s = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) w /= s;
}

namespace {

double log_normal(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

// Nodes with weights for expectations under a proposal density g, plus ln g
// at each node.
struct Rule1d {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> log_g;
};

Rule1d normal_rule(int m, double mu, double sd) {
  std::vector<double> z, w;
  gauss_hermite(m, z, w);
  Rule1d r;
  for (int k = 0; k < m; ++k) {
    const double x = mu + sd * z[static_cast<std::size_t>(k)];
    r.nodes.push_back(x);
    r.weights.push_back(w[static_cast<std::size_t>(k)]);
    r.log_g.push_back(log_normal(x, mu, sd));
  }
  return r;
}

double log_mix2(double x, double p, double mu1, double sd1, double mu2, double sd2) {
  const double a = std::log(p) + log_normal(x, mu1, sd1);
  if (p >= 1.0) return a;
  const double b = std::log1p(-p) + log_normal(x, mu2, sd2);
  if (p <= 0.0) return b;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// The Y marginal of the scalar mixture: every component gets its own m nodes.
Rule1d mixture_rule(int m, const ModelSpec& s) {
  const double sd1 = std::sqrt(1.0 + s.eps * s.eps);
  Rule1d r;
  const double comp_w[2] = {s.p, 1.0 - s.p};
  const double comp_mu[2] = {0.0, s.mu_z};
  const double comp_sd[2] = {sd1, 1.0};
  for (int c = 0; c < 2; ++c) {
    if (comp_w[c] <= 0.0) continue;
    const Rule1d part = normal_rule(m, comp_mu[c], comp_sd[c]);
    for (std::size_t k = 0; k < part.nodes.size(); ++k) {
      r.nodes.push_back(part.nodes[k]);
      r.weights.push_back(comp_w[c] * part.weights[k]);
      r.log_g.push_back(log_mix2(part.nodes[k], s.p, 0.0, sd1, s.mu_z, 1.0));
    }
  }
  return r;
}

// Importance-weighted product rule: P_ij ~ W_i W_j f(x_i, y_j) / (g(x_i) g(y_j)).
JointPmf product_rule_pmf(const Rule1d& rx, const Rule1d& ry, const auto& log_f) {
  const auto nx = static_cast<Eigen::Index>(rx.nodes.size());
  const auto ny = static_cast<Eigen::Index>(ry.nodes.size());
  Matrix lp(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      lp(i, j) = std::log(rx.weights[si]) + std::log(ry.weights[sj]) + log_f(rx.nodes[si], ry.nodes[sj]) -
                 rx.log_g[si] - ry.log_g[sj];
    }
  }
  const double mx = lp.maxCoeff();
  Matrix p = (lp.array() - mx).exp().matrix();
  Matrix xl(nx, 1), yl(ny, 1);
  for (Eigen::Index i = 0; i < nx; ++i) xl(i, 0) = rx.nodes[static_cast<std::size_t>(i)];
  for (Eigen::Index j = 0; j < ny; ++j) yl(j, 0) = ry.nodes[static_cast<std::size_t>(j)];
  return JointPmf::from_matrix(std::move(p), std::move(xl), std::move(yl));
}

// Independent coordinates: the joint pmf is the Kronecker product of the
// per-coordinate pmfs.
JointPmf kron_power(const JointPmf& one, int d) {
  JointPmf out = one;
  for (int k = 1; k < d; ++k) {
    const Eigen::Index ax = out.p.rows(), ay = out.p.cols();
    const Eigen::Index bx = one.p.rows(), by = one.p.cols();
    Matrix p(ax * bx, ay * by);
    Matrix xl(ax * bx, out.x_nodes.cols() + 1), yl(ay * by, out.y_nodes.cols() + 1);
    for (Eigen::Index i = 0; i < ax; ++i) {
      for (Eigen::Index r = 0; r < bx; ++r) {
        xl.row(i * bx + r) << out.x_nodes.row(i), one.x_nodes(r, 0);
        for (Eigen::Index j = 0; j < ay; ++j) p.block(i * bx + r, j * by, 1, by) = out.p(i, j) * one.p.row(r);
      }
    }
    for (Eigen::Index j = 0; j < ay; ++j) {
      for (Eigen::Index c = 0; c < by; ++c) yl.row(j * by + c) << out.y_nodes.row(j), one.y_nodes(c, 0);
    }
    out = JointPmf::from_matrix(std::move(p), std::move(xl), std::move(yl));
  }
  return out;
}

void check_bins(Eigen::Index nx, Eigen::Index ny) {
  if (static_cast<double>(nx) * static_cast<double>(ny) > 4096.0) {
    throw ParameterError("quadrature_discretize: " + std::to_string(nx) + " x " + std::to_string(ny) +
                         " bins exceeds 4096; lower m");
  }
}

JointPmf gaussian_pmf(const ModelSpec& s, int m) {
  const int dx = s.x_dim(), dy = s.y_dim();
  const Matrix& c = s.joint_cov;
  const double nx = std::pow(m, dx), ny = std::pow(m, dy);
  check_bins(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
  // Tensor-product nodes on the marginal standard deviations.
  auto tensor = [&](int off, int d) {
    std::vector<Rule1d> rules;
    for (int k = 0; k < d; ++k) rules.push_back(normal_rule(m, 0.0, std::sqrt(c(off + k, off + k))));
    const auto count = static_cast<Eigen::Index>(std::pow(m, d));
    Matrix nodes(count, d);
    Vector logw(count), logg(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      Eigen::Index r = i;
      logw[i] = logg[i] = 0.0;
      for (int k = d - 1; k >= 0; --k) {
        const auto idx = static_cast<std::size_t>(r % m);
        r /= m;
        nodes(i, k) = rules[static_cast<std::size_t>(k)].nodes[idx];
        logw[i] += std::log(rules[static_cast<std::size_t>(k)].weights[idx]);
        logg[i] += rules[static_cast<std::size_t>(k)].log_g[idx];
      }
    }
    return std::make_tuple(nodes, logw, logg);
  };
  const auto [xn, xw, xg] = tensor(0, dx);
  const auto [yn, yw, yg] = tensor(dx, dy);
  const Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) throw InvalidCovarianceError("quadrature_discretize: covariance not positive definite");
  Matrix lp(xn.rows(), yn.rows());
  Vector z(dx + dy);
  for (Eigen::Index i = 0; i < xn.rows(); ++i) {
    for (Eigen::Index j = 0; j < yn.rows(); ++j) {
      z << xn.row(i).transpose(), yn.row(j).transpose();
      const double quad = z.dot(llt.solve(z));
      lp(i, j) = xw[i] + yw[j] - 0.5 * quad - xg[i] - yg[j];
    }
  }
  Matrix p = (lp.array() - lp.maxCoeff()).exp().matrix();
  return JointPmf::from_matrix(std::move(p), xn, yn);
}

// Equal-probability bins for X ~ Exp(1), Y = X + W with W ~ Exp(1); cell
// masses integrate f_X(x) [F_W(d - x) - F_W(c - x)] over each x bin.
JointPmf exponential_quantile_pmf(int m) {
  constexpr double kXMax = 40.0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> xe(static_cast<std::size_t>(m) + 1), ye(static_cast<std::size_t>(m) + 1);
  Matrix xl(m, 1), yl(m, 1);
  for (int k = 0; k <= m; ++k) {
    const double q = static_cast<double>(k) / m;
    xe[static_cast<std::size_t>(k)] = k == m ? kXMax : -std::log1p(-q);
    ye[static_cast<std::size_t>(k)] = k == 0 ? 0.0 : (k == m ? inf : boost::math::gamma_p_inv(2.0, q));
  }
  for (int k = 0; k < m; ++k) {
    const double q = (k + 0.5) / m;
    xl(k, 0) = -std::log1p(-q);
    yl(k, 0) = boost::math::gamma_p_inv(2.0, q);
  }
  auto fw = [](double w) { return w > 0.0 ? -std::expm1(-w) : 0.0; };
  Matrix p(m, m);
  for (int i = 0; i < m; ++i) {
    const double a = xe[static_cast<std::size_t>(i)], b = xe[static_cast<std::size_t>(i) + 1];
    for (int j = 0; j < m; ++j) {
      const double c = ye[static_cast<std::size_t>(j)], d = ye[static_cast<std::size_t>(j) + 1];
      auto g = [&](double x) { return std::exp(-x) * ((std::isinf(d) ? 1.0 : fw(d - x)) - fw(c - x)); };
      std::vector<double> cuts{a};
      for (const double t : {c, d}) {
        if (t > a && t < b) cuts.push_back(t);
      }
      cuts.push_back(b);
      std::sort(cuts.begin(), cuts.end());
      double s = 0.0;
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        s += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, cuts[k], cuts[k + 1], 8, 1e-12);
      }
      p(i, j) = std::max(s, 0.0);
    }
  }
  auto out = JointPmf::from_matrix(std::move(p), std::move(xl), std::move(yl));
  out.quantile_fallback = true;
  return out;
}

}  // namespace

JointPmf quadrature_discretize(const ModelSpec& spec, int m) {
  spec.validate();
  if (m < 8 || m > 64) throw ParameterError("quadrature_discretize: m must lie in [8, 64]");
  switch (spec.family) {
    case ModelFamily::Gaussian: return gaussian_pmf(spec, m);
    case ModelFamily::Gm1d:
    case ModelFamily::GmMv: {
      const int d = spec.family == ModelFamily::Gm1d ? 1 : spec.d;
      const Rule1d rx = normal_rule(m, 0.0, 1.0);
      const Rule1d ry = mixture_rule(m, spec);
      check_bins(static_cast<Eigen::Index>(std::pow(rx.nodes.size(), d)),
                 static_cast<Eigen::Index>(std::pow(ry.nodes.size(), d)));
      auto log_f = [&](double x, double y) {
        return log_normal(x, 0.0, 1.0) + log_mix2(y, spec.p, x, spec.eps, spec.mu_z, 1.0);
      };
      return kron_power(product_rule_pmf(rx, ry, log_f), d);
    }
    case ModelFamily::MvgScramble: {
      // The coordinatewise mirror is a bijection, so the pre-scramble joint
      // has the same IB curve.
      check_bins(static_cast<Eigen::Index>(std::pow(m, spec.d)), static_cast<Eigen::Index>(std::pow(m, spec.d)));
      const Rule1d rx = normal_rule(m, 0.0, 1.0);
      const Rule1d ry = normal_rule(m, 0.0, std::sqrt(2.0));
      auto log_f = [](double x, double y) { return log_normal(x, 0.0, 1.0) + log_normal(y, x, 1.0); };
      return kron_power(product_rule_pmf(rx, ry, log_f), spec.d);
    }
    case ModelFamily::ExpGamma: {
      if (spec.d != 1) throw UnsupportedModelError("quadrature_discretize: exponential model supported for d = 1 only");
      return exponential_quantile_pmf(m);
    }
  }
  throw UnsupportedModelError("quadrature_discretize: unsupported model family");
}

JointPmf empirical_pmf(VectorRef x, VectorRef y, int bins) {
  const Eigen::Index n = x.size();
  if (y.size() != n) throw ParameterError("empirical_pmf: length mismatch");
  if (bins < 2 || n < bins) throw InsufficientDataError("empirical_pmf: need n >= bins >= 2");
  auto bin_of = [&](VectorRef v) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
    std::vector<int> out(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) out[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])] = static_cast<int>(r * bins / n);
    return out;
  };
  const auto bx = bin_of(x);
  const auto by = bin_of(y);
  Matrix p = Matrix::Zero(bins, bins);
  for (Eigen::Index i = 0; i < n; ++i) p(bx[static_cast<std::size_t>(i)], by[static_cast<std::size_t>(i)]) += 1.0;
  return JointPmf::from_matrix(std::move(p));
}

}  // namespace gaussbound
