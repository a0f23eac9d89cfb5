#include "gaussbound/gib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gaussbound {

namespace {

constexpr double kMaxComponentNats = 30.0;
constexpr double kDeterministicLambda = 1e-10;

}  // namespace

std::vector<IBPoint> IBCurve::expressed() const {
  if (units == InfoUnits::Nats) return points;
  std::vector<IBPoint> out = points;
  for (auto& p : out) {
    p.itx = nats_to_bits(p.itx);
    p.ity = nats_to_bits(p.ity);
  }
  return out;
}

GibSpectrum gib_spectrum(const Matrix& cx, const Matrix& cy, const Matrix& cxy) {
  const auto dx = cx.rows();
  const auto dy = cy.rows();
  if (cx.cols() != dx || cy.cols() != dy || cxy.rows() != dx || cxy.cols() != dy) {
    throw ParameterError("gib_spectrum: block shapes do not match");
  }
  auto check = [](const Matrix& c, const char* name) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, c.diagonal().cwiseAbs().maxCoeff());
    if (!(es.eigenvalues().minCoeff() > 1e-12 * scale)) {
      throw ConditioningError(std::string("gib_spectrum: ") + name + " is singular; add a ridge to the covariance");
    }
  };
  check(cx, "C_X");
  check(cy, "C_Y");

  GibSpectrum s;
  s.cx = 0.5 * (cx + cx.transpose());
  const Eigen::LLT<Matrix> ly(0.5 * (cy + cy.transpose()));
  Matrix cxgy = s.cx - cxy * ly.solve(cxy.transpose());
  s.cx_given_y = 0.5 * (cxgy + cxgy.transpose());

  // Left eigenvectors of C_{X|Y} C_X^{-1}: with C_X = L L^T and v = L^{-T} w,
  // the problem is the symmetric L^{-1} C_{X|Y} L^{-T} w = lambda w.
  const Eigen::LLT<Matrix> lx(s.cx);
  const Matrix l = lx.matrixL();
  Matrix sym = l.triangularView<Eigen::Lower>().solve(s.cx_given_y);
  sym = l.triangularView<Eigen::Lower>().solve(sym.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sym + sym.transpose()));
  s.lambda = es.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
  const Matrix w = es.eigenvectors();
  const Matrix vcols = l.transpose().triangularView<Eigen::Upper>().solve(w);
  s.v = vcols.transpose();
  s.r.resize(dx);
  s.beta_crit.resize(dx);
  for (Eigen::Index i = 0; i < dx; ++i) {
    s.r[i] = s.v.row(i) * s.cx * s.v.row(i).transpose();
    s.beta_crit[i] = s.lambda[i] < 1.0 ? 1.0 / (1.0 - s.lambda[i]) : std::numeric_limits<double>::infinity();
  }
  return s;
}

Matrix gib_projection(const GibSpectrum& spec, double beta, bool* saturated) {
  if (!(beta > 0.0)) throw ParameterError("gib_projection: beta must be > 0");
  if (saturated) *saturated = false;
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < spec.lambda.size(); ++i) {
    if (beta > spec.beta_crit[i]) active.push_back(i);
  }
  Matrix a(static_cast<Eigen::Index>(active.size()), spec.v.cols());
  const double cap = std::expm1(2.0 * kMaxComponentNats);
  for (std::size_t t = 0; t < active.size(); ++t) {
    const auto i = active[t];
    const double lam = spec.lambda[i];
    const double num = beta * (1.0 - lam) - 1.0;
    double a2;
    if (lam <= kDeterministicLambda || num / lam > cap) {
      a2 = cap / spec.r[i];
      if (saturated) *saturated = true;
    } else {
      a2 = num / (lam * spec.r[i]);
    }
    a.row(static_cast<Eigen::Index>(t)) = std::sqrt(std::max(a2, 0.0)) * spec.v.row(i);
  }
  return a;
}

PointInfo gib_point_info(const Matrix& a, const Matrix& cx, const Matrix& cx_given_y) {
  if (a.rows() == 0) return {};
  auto half_logdet = [&](const Matrix& c) {
    const Matrix m = Matrix::Identity(a.rows(), a.rows()) + a * c * a.transpose();
    const Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
    return llt.matrixLLT().diagonal().array().log().sum();
  };
  PointInfo p;
  p.itx = half_logdet(cx);
  p.ity = p.itx - half_logdet(cx_given_y);
  return p;
}

IBCurve gib_curve(const GibSpectrum& spec, const std::vector<double>& beta_grid) {
  if (!std::is_sorted(beta_grid.begin(), beta_grid.end())) throw ParameterError("gib_curve: beta grid must be ascending");
  IBCurve curve;
  const double total = gib_total_information(spec);
  for (const double beta : beta_grid) {
    const Matrix a = gib_projection(spec, beta);
    auto p = gib_point_info(a, spec.cx, spec.cx_given_y);
    p.ity = std::clamp(p.ity, 0.0, std::min(p.itx, total));
    curve.points.push_back({beta, p.itx, p.ity});
  }
  return curve;
}

std::vector<double> default_beta_grid(const GibSpectrum& spec, int count) {
  if (count < 2) throw ParameterError("default_beta_grid: count must be >= 2");
  double b1 = spec.beta_crit.size() > 0 ? spec.beta_crit[0] : 1.0;
  if (!std::isfinite(b1)) b1 = 1.0;
  const double lo = std::log(0.9 * b1);
  const double hi = std::log(100.0 * b1);
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (count - 1));
  return g;
}

double gib_total_information(const GibSpectrum& spec) {
  double s = 0.0;
  for (const double l : spec.lambda) s -= 0.5 * std::log(std::max(l, std::exp(-2.0 * kMaxComponentNats)));
  return s;
}

double curve_ity_at(const IBCurve& curve, double itx) {
  std::vector<IBPoint> pts = curve.points;
  pts.push_back({0.0, 0.0, 0.0});
  std::sort(pts.begin(), pts.end(), [](const IBPoint& a, const IBPoint& b) {
    return a.itx < b.itx || (a.itx == b.itx && a.ity < b.ity);
  });
  if (itx <= pts.front().itx) return pts.front().ity;
  if (itx >= pts.back().itx) return pts.back().ity;
  auto hi = std::lower_bound(pts.begin(), pts.end(), itx, [](const IBPoint& p, double x) { return p.itx < x; });
  const auto lo = hi - 1;
  if (hi->itx - lo->itx <= 0.0) return hi->ity;
  const double t = (itx - lo->itx) / (hi->itx - lo->itx);
  return lo->ity + t * (hi->ity - lo->ity);
}

CurveCheck check_curve(const IBCurve& curve, double tol) {
  CurveCheck c;
  const auto& p = curve.points;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].ity > p[i].itx + tol) c.dpi = false;
    if (i > 0 && p[i].beta >= p[i - 1].beta && (p[i].itx < p[i - 1].itx - tol || p[i].ity < p[i - 1].ity - tol)) {
      c.monotone = false;
    }
  }
  std::vector<IBPoint> s = p;
  s.push_back({0.0, 0.0, 0.0});
  std::sort(s.begin(), s.end(), [](const IBPoint& a, const IBPoint& b) { return a.itx < b.itx; });
  std::vector<IBPoint> d;
  for (const auto& q : s) {
    if (d.empty() || q.itx - d.back().itx > 1e-9) {
      d.push_back(q);
    } else {
      d.back().ity = std::max(d.back().ity, q.ity);
    }
  }
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    const double t = (d[i].itx - d[i - 1].itx) / (d[i + 1].itx - d[i - 1].itx);
    const double chord = d[i - 1].ity + t * (d[i + 1].ity - d[i - 1].ity);
    const double gap = chord - d[i].ity;
    c.worst_concavity = std::max(c.worst_concavity, gap);
    if (gap > tol) c.concave = false;
  }
  return c;
}

std::vector<IBPoint> concave_envelope(std::vector<IBPoint> points) {
  if (points.empty()) return points;
  std::vector<IBPoint> s = points;
  s.push_back({0.0, 0.0, 0.0});
  std::sort(s.begin(), s.end(), [](const IBPoint& a, const IBPoint& b) {
    return a.itx < b.itx || (a.itx == b.itx && a.ity > b.ity);
  });
  double run = 0.0;
  for (auto& q : s) q.ity = run = std::max(run, q.ity);
  std::vector<IBPoint> hull;
  for (const auto& q : s) {
    if (!hull.empty() && q.itx == hull.back().itx) continue;
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.itx - a.itx) * (q.ity - a.ity) - (b.ity - a.ity) * (q.itx - a.itx);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(q);
  }
  IBCurve env;
  env.points = hull;
  for (auto& p : points) p.ity = std::max(p.ity, curve_ity_at(env, p.itx));
  return points;
}

}  // namespace gaussbound
