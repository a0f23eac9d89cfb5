#include "gaussbound/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

namespace gaussbound {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation; relative error ~1e-9 before refinement.
double acklam_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: probability must lie in (0, 1), got " +
                      std::to_string(p));
  }
  if (p == 0.5) return 0.0;
  double x = acklam_quantile(p);
  // One Halley step on the erfc-based CDF. Work on the smaller tail so the
  // residual keeps full relative precision.
  const bool upper = p > 0.5;
  const double tail = upper ? 1.0 - p : p;
  const double xt = upper ? -x : x;
  const double e = 0.5 * std::erfc(-xt / std::sqrt(2.0)) - tail;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * xt * xt);
  const double refined = xt - u / (1.0 + 0.5 * xt * u);
  return upper ? -refined : refined;
}

const std::vector<double>& normal_scores(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  // Enforce exact antisymmetry so the grid has zero mean bit-for-bit.
  for (std::size_t i = 0; i < n / 2; ++i) {
    grid[n - 1 - i] = -grid[i];
  }
  if (n % 2 == 1) grid[n / 2] = 0.0;
  return cache.emplace(n, std::move(grid)).first->second;
}

EmpiricalCdf::EmpiricalCdf(VectorRef values) : sorted_(values.begin(), values.end()) {
  if (sorted_.size() < 2) {
    throw InsufficientDataError("empirical CDF needs at least 2 samples");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

MonotoneMap::MonotoneMap(std::vector<double> knots_in, std::vector<double> knots_out,
                         Extrapolation extrapolation)
    : in_(std::move(knots_in)), out_(std::move(knots_out)), extrapolation_(extrapolation) {
  if (in_.size() != out_.size() || in_.empty()) {
    throw ParameterError("monotone map: knot vectors must be non-empty and equal length");
  }
  for (std::size_t i = 1; i < in_.size(); ++i) {
    if (!(in_[i] > in_[i - 1]) || !(out_[i] > out_[i - 1])) {
      throw ParameterError("monotone map: knots must be strictly increasing");
    }
  }
}

double MonotoneMap::operator()(double x) const {
  const std::size_t m = in_.size();
  if (m == 1) return out_[0];
  auto segment = [&](std::size_t i) {
    const double t = (x - in_[i]) / (in_[i + 1] - in_[i]);
    return out_[i] + t * (out_[i + 1] - out_[i]);
  };
  if (x <= in_.front()) {
    return extrapolation_ == Extrapolation::Clamp ? out_.front() : segment(0);
  }
  if (x >= in_.back()) {
    return extrapolation_ == Extrapolation::Clamp ? out_.back() : segment(m - 2);
  }
  const auto it = std::upper_bound(in_.begin(), in_.end(), x);
  return segment(static_cast<std::size_t>(it - in_.begin()) - 1);
}

Vector MonotoneMap::operator()(VectorRef x) const {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = (*this)(x[i]);
  return out;
}

MonotoneMap MonotoneMap::inverse() const { return MonotoneMap(out_, in_, extrapolation_); }

namespace {

// Sorted order of x with ties shuffled, i.e. ranks under uniform tie-breaking.
std::vector<Eigen::Index> randomized_order(VectorRef x, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && x[order[end]] == x[order[start]]) ++end;
    if (end - start > 1) {
      std::shuffle(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(end), rng);
    }
    start = end;
  }
  return order;
}

}  // namespace

Vector gaussianize_ranks(VectorRef x, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n < 2) throw InsufficientDataError("marginal Gaussianization needs n >= 2");
  const auto& grid = normal_scores(n);
  const auto order = randomized_order(x, rng);
  Vector u(x.size());
  for (std::size_t r = 0; r < n; ++r) u[order[r]] = grid[r];
  return u;
}

GaussianizeResult marginal_gaussianize(VectorRef x, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n < 2) throw InsufficientDataError("marginal Gaussianization needs n >= 2");
  Rng rng(seed);
  const auto& grid = normal_scores(n);
  const auto order = randomized_order(x, rng);
  Vector u(x.size());
  for (std::size_t r = 0; r < n; ++r) u[order[r]] = grid[r];

  // Out-of-sample map: one knot per distinct value, tied outputs averaged.
  std::vector<double> knots_in;
  std::vector<double> knots_out;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && x[order[end]] == x[order[start]]) ++end;
    double sum = 0.0;
    for (std::size_t r = start; r < end; ++r) sum += grid[r];
    knots_in.push_back(x[order[start]]);
    knots_out.push_back(sum / static_cast<double>(end - start));
    start = end;
  }
  return {std::move(u), MonotoneMap(std::move(knots_in), std::move(knots_out))};
}

Matrix gaussianize_columns(const Matrix& block, Rng& rng) {
  Matrix out(block.rows(), block.cols());
  for (Eigen::Index j = 0; j < block.cols(); ++j) out.col(j) = gaussianize_ranks(block.col(j), rng);
  return out;
}

Matrix CovarianceBlocks::joint() const {
  const auto du = cu.rows();
  const auto dv = cv.rows();
  Matrix j(du + dv, du + dv);
  j.topLeftCorner(du, du) = cu;
  j.bottomRightCorner(dv, dv) = cv;
  j.topRightCorner(du, dv) = cuv;
  j.bottomLeftCorner(dv, du) = cuv.transpose();
  return j;
}

CovarianceBlocks CovarianceBlocks::from_samples(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows()) throw ParameterError("covariance blocks: row count mismatch");
  Matrix joint(u.rows(), u.cols() + v.cols());
  joint << u, v;
  const Matrix c = covariance(joint);
  return {c.topLeftCorner(u.cols(), u.cols()), c.bottomRightCorner(v.cols(), v.cols()),
          c.topRightCorner(u.cols(), v.cols())};
}

Matrix covariance(const Matrix& samples) {
  if (samples.rows() < 2) throw InsufficientDataError("covariance needs n >= 2");
  const Matrix centered = samples.rowwise() - samples.colwise().mean();
  Matrix c = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  return 0.5 * (c + c.transpose());
}

namespace {

constexpr double kRidge = 1e-10;

// Ridge 1e-10 * tr/d, only added when the block is near-singular so that
// well-conditioned inputs keep exact linear invariance.
Matrix ridged(const Matrix& c) {
  const double scale = c.trace() / static_cast<double>(c.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() > 1e-6 * scale) return c;
  return c + Matrix::Identity(c.rows(), c.cols()) * (kRidge * scale);
}

double log_det_spd(const Matrix& c, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConditioningError(std::string(what) + ": eigensolver failed");
  if (es.eigenvalues().minCoeff() <= 1e-12) {
    throw ConditioningError(std::string(what) + " is singular; add a ridge or drop constant columns");
  }
  return es.eigenvalues().array().log().sum();
}

}  // namespace

double gaussian_mi_bound(const CovarianceBlocks& blocks) {
  const Matrix raw = blocks.joint();
  Eigen::SelfAdjointEigenSolver<Matrix> check(raw, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, raw.diagonal().cwiseAbs().maxCoeff());
  if (check.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw InvalidCovarianceError("joint covariance is not positive semi-definite");
  }
  const Matrix cu = ridged(blocks.cu);
  const Matrix cv = ridged(blocks.cv);
  CovarianceBlocks r{cu, cv, blocks.cuv};
  const Matrix joint = r.joint();
  const double ld_u = log_det_spd(cu, "C_U");
  const double ld_v = log_det_spd(cv, "C_V");
  Eigen::SelfAdjointEigenSolver<Matrix> es(joint, Eigen::EigenvaluesOnly);
  // Floor at the ridge level: a saturated pair (V = U) stays finite.
  const double floor = kRidge * 1e-3 * std::max(cu.trace(), cv.trace());
  const double ld_joint = es.eigenvalues().array().max(floor).log().sum();
  return std::max(0.0, 0.5 * (ld_u + ld_v - ld_joint));
}

Vector canonical_correlations(const CovarianceBlocks& blocks) {
  const Eigen::LLT<Matrix> lu(ridged(blocks.cu));
  const Eigen::LLT<Matrix> lv(ridged(blocks.cv));
  if (lu.info() != Eigen::Success || lv.info() != Eigen::Success) {
    throw ConditioningError("canonical correlations: marginal covariance not positive definite");
  }
  // K = L_U^{-1} C_UV L_V^{-T}
  Matrix k = lu.matrixL().solve(blocks.cuv);
  k = lv.matrixL().solve(k.transpose()).transpose();
  Eigen::JacobiSVD<Matrix> svd(k);
  return svd.singularValues().cwiseMin(1.0);
}

double w2_to_normal(VectorRef x) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n < 2) throw InsufficientDataError("w2_to_normal needs n >= 2");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const auto& grid = normal_scores(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += (s[i] - grid[i]) * (s[i] - grid[i]);
  return acc / static_cast<double>(n);
}

double ks_normal(VectorRef x) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n < 1) throw InsufficientDataError("ks_normal needs samples");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  double d = 0.0;
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
  }
  return d;
}

double correlation(VectorRef a, VectorRef b) {
  if (a.size() != b.size() || a.size() < 2) throw ParameterError("correlation: size mismatch");
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  const double den = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  if (den <= 0.0) return 0.0;
  return ca.dot(cb) / den;
}

double distance_correlation(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows();
  if (b.rows() != n || n < 2) throw ParameterError("distance_correlation: size mismatch");
  auto dist = [](const Matrix& m, Eigen::Index i, Eigen::Index j) {
    return (m.row(i) - m.row(j)).norm();
  };
  Vector ra = Vector::Zero(n);
  Vector rb = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double da = dist(a, i, j);
      const double db = dist(b, i, j);
      ra[i] += da;
      ra[j] += da;
      rb[i] += db;
      rb[j] += db;
    }
  }
  const double nn = static_cast<double>(n);
  ra /= nn;
  rb /= nn;
  const double ga = ra.mean();
  const double gb = rb.mean();
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double da = (i == j) ? 0.0 : dist(a, i, j);
      const double db = (i == j) ? 0.0 : dist(b, i, j);
      const double aa = da - ra[i] - ra[j] + ga;
      const double bb = db - rb[i] - rb[j] + gb;
      sab += aa * bb;
      saa += aa * aa;
      sbb += bb * bb;
    }
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::sqrt(std::max(0.0, sab) / std::sqrt(saa * sbb));
}

double binned_mutual_information(VectorRef a, VectorRef b, int bins) {
  const Eigen::Index n = a.size();
  if (b.size() != n || n < 2 || bins < 1) throw ParameterError("binned MI: bad input");
  auto bin_of = [&](VectorRef v) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<int> out(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
      out[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
          static_cast<int>((r * bins) / n);
    }
    return out;
  };
  const auto ba = bin_of(a);
  const auto bb = bin_of(b);
  Matrix counts = Matrix::Zero(bins, bins);
  for (Eigen::Index i = 0; i < n; ++i) counts(ba[i], bb[i]) += 1.0;
  counts /= static_cast<double>(n);
  const Vector pa = counts.rowwise().sum();
  const Vector pb = counts.colwise().sum().transpose();
  double mi = 0.0;
  for (int i = 0; i < bins; ++i) {
    for (int j = 0; j < bins; ++j) {
      const double p = counts(i, j);
      if (p > 0.0) mi += p * std::log(p / (pa[i] * pb[j]));
    }
  }
  return mi;
}

Matrix random_rotation(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign fix on diag(R) gives Haar measure on O(d); then force det = +1.
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return q;
}

bool standardize(Vector& v) {
  v.array() -= v.mean();
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (!(sd > 1e-300) || sd < 1e-12 * (1.0 + v.cwiseAbs().maxCoeff())) return false;
  v /= sd;
  return true;
}

}  // namespace gaussbound
