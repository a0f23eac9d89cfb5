#include "gaussbound/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gaussbound/stats.hpp"

namespace gaussbound {

ModelSpec ModelSpec::gm1d(double mu_z, double eps) {
  ModelSpec s;
  s.family = ModelFamily::Gm1d;
  s.mu_z = mu_z;
  s.eps = eps;
  return s;
}

ModelSpec ModelSpec::gaussian_pair(double rho) {
  Matrix c(2, 2);
  c << 1.0, rho, rho, 1.0;
  return gaussian(c, 1);
}

ModelSpec ModelSpec::gaussian(Matrix joint_cov, int dx) {
  ModelSpec s;
  s.family = ModelFamily::Gaussian;
  s.joint_cov = std::move(joint_cov);
  s.dx = dx;
  s.d = dx;
  return s;
}

void ModelSpec::validate() const {
  switch (family) {
    case ModelFamily::Gm1d:
    case ModelFamily::GmMv:
      if (!(eps > 0.0) || !std::isfinite(mu_z)) throw ParameterError("mixture model: eps > 0 and finite mu_z required");
      if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("mixture model: p must lie in [0, 1]");
      if (family == ModelFamily::GmMv && (d < 1 || d > 5)) throw ParameterError("gm_mv: 1 <= d <= 5 required");
      break;
    case ModelFamily::MvgScramble:
    case ModelFamily::ExpGamma:
      if (d < 1 || d > 10) throw ParameterError("model dimension must satisfy 1 <= d <= 10");
      break;
    case ModelFamily::Gaussian: {
      if (joint_cov.rows() != joint_cov.cols() || dx < 1 || dx >= joint_cov.rows()) {
        throw ParameterError("gaussian model: joint covariance must be square with 1 <= dx < dim");
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es(joint_cov, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10) throw InvalidCovarianceError("gaussian model: covariance not PSD");
      break;
    }
  }
}

int ModelSpec::x_dim() const {
  if (family == ModelFamily::Gm1d) return 1;
  if (family == ModelFamily::Gaussian) return dx;
  return d;
}

int ModelSpec::y_dim() const {
  if (family == ModelFamily::Gm1d) return 1;
  if (family == ModelFamily::Gaussian) return static_cast<int>(joint_cov.rows()) - dx;
  return d;
}

std::string family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::Gm1d: return "gm1d";
    case ModelFamily::MvgScramble: return "mvg";
    case ModelFamily::ExpGamma: return "expgamma";
    case ModelFamily::GmMv: return "gm_mv";
    case ModelFamily::Gaussian: return "gaussian";
  }
  return "unknown";
}

ModelFamily parse_family(const std::string& name) {
  if (name == "gm1d") return ModelFamily::Gm1d;
  if (name == "mvg" || name == "mvg_scramble") return ModelFamily::MvgScramble;
  if (name == "expgamma" || name == "exp") return ModelFamily::ExpGamma;
  if (name == "gm_mv" || name == "gmmv") return ModelFamily::GmMv;
  if (name == "gaussian") return ModelFamily::Gaussian;
  throw ParameterError("unknown model family '" + name + "' (expected gm1d, mvg, expgamma, gm_mv, gaussian)");
}

double mirror_transform(double t, double lo, double hi) {
  if (!(lo < hi)) throw ParameterError("mirror_transform: lo < hi required");
  return (t >= lo && t <= hi) ? (lo + hi) - t : t;
}

namespace {

// One coordinate of the mixture model; draw order x, branch, then w or z.
void draw_gm(Rng& rng, double mu_z, double eps, double p, double& x, double& y, std::uint8_t& branch) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  x = normal(rng);
  branch = unif(rng) < p ? 1 : 0;
  y = branch ? x + eps * normal(rng) : mu_z + normal(rng);
}

ModelSample mixture_sample(Eigen::Index n, int d, double mu_z, double eps, double p, std::uint64_t seed) {
  ModelSample out;
  out.samples.x.resize(n, d);
  out.samples.y.resize(n, d);
  out.branch.resize(static_cast<std::size_t>(n * d));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      draw_gm(rng, mu_z, eps, p, out.samples.x(i, c), out.samples.y(i, c),
              out.branch[static_cast<std::size_t>(i * d + c)]);
    }
  }
  out.raw = out.samples;
  out.rotation_x = Matrix::Identity(d, d);
  out.rotation_y = Matrix::Identity(d, d);
  return out;
}

}  // namespace

ModelSample gm1d_sample(Eigen::Index n, double mu_z, double eps, std::uint64_t seed) {
  auto spec = ModelSpec::gm1d(mu_z, eps);
  spec.validate();
  auto out = mixture_sample(n, 1, mu_z, eps, spec.p, seed);
  out.true_mi = gm1d_true_mi(mu_z, eps, spec.p).nats;
  return out;
}

ModelSample gm_mv_sample(Eigen::Index n, int d, double mu_z, double eps, std::uint64_t seed) {
  ModelSpec spec = ModelSpec::gm1d(mu_z, eps);
  spec.family = ModelFamily::GmMv;
  spec.d = d;
  spec.validate();
  auto out = mixture_sample(n, d, mu_z, eps, spec.p, seed);
  out.true_mi = d * gm1d_true_mi(mu_z, eps, spec.p).nats;
  return out;
}

ModelSample mvg_scramble_sample(Eigen::Index n, int d, std::uint64_t seed) {
  ModelSpec spec;
  spec.family = ModelFamily::MvgScramble;
  spec.d = d;
  spec.validate();
  ModelSample out;
  out.raw.x.resize(n, d);
  out.raw.y.resize(n, d);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      const double x = normal(rng);
      const double w = normal(rng);
      out.raw.x(i, c) = x;
      out.raw.y(i, c) = x + w;
    }
  }
  out.samples = out.raw;
  out.samples.x = out.samples.x.unaryExpr([](double t) { return mirror_transform(t, -1.0, 1.0); });
  out.samples.y = out.samples.y.unaryExpr([](double t) { return mirror_transform(t, -1.0, 1.0); });
  out.rotation_x = Matrix::Identity(d, d);
  out.rotation_y = Matrix::Identity(d, d);
  out.true_mi = 0.5 * d * kLn2;
  return out;
}

ModelSample expgamma_sample(Eigen::Index n, int d, std::uint64_t seed, std::uint64_t rotation_seed) {
  ModelSpec spec;
  spec.family = ModelFamily::ExpGamma;
  spec.d = d;
  spec.validate();
  ModelSample out;
  out.raw.x.resize(n, d);
  out.raw.y.resize(n, d);
  Rng rng(seed);
  std::exponential_distribution<double> expo(1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      const double x = expo(rng);
      const double w = expo(rng);
      out.raw.x(i, c) = x;
      out.raw.y(i, c) = x + w;
    }
  }
  Rng rot(rotation_seed);
  out.rotation_x = random_rotation(d, rot);
  out.rotation_y = random_rotation(d, rot);
  const Matrix mx = out.raw.x.unaryExpr([](double t) { return mirror_transform(t, 0.0, 2.0); });
  const Matrix my = out.raw.y.unaryExpr([](double t) { return mirror_transform(t, 0.0, 2.0); });
  out.samples.x = mx * out.rotation_x.transpose();
  out.samples.y = my * out.rotation_y.transpose();
  out.true_mi = d * kEulerGamma;
  return out;
}

ModelSample sample_model(const ModelSpec& spec, Eigen::Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ParameterError("sample size must be >= 1");
  switch (spec.family) {
    case ModelFamily::Gm1d: {
      auto out = mixture_sample(n, 1, spec.mu_z, spec.eps, spec.p, seed);
      out.true_mi = gm1d_true_mi(spec.mu_z, spec.eps, spec.p).nats;
      return out;
    }
    case ModelFamily::GmMv: {
      auto out = mixture_sample(n, spec.d, spec.mu_z, spec.eps, spec.p, seed);
      out.true_mi = spec.d * gm1d_true_mi(spec.mu_z, spec.eps, spec.p).nats;
      return out;
    }
    case ModelFamily::MvgScramble: return mvg_scramble_sample(n, spec.d, seed);
    case ModelFamily::ExpGamma: return expgamma_sample(n, spec.d, seed, spec.rotation_seed);
    case ModelFamily::Gaussian: {
      const auto dim = spec.joint_cov.rows();
      Eigen::SelfAdjointEigenSolver<Matrix> es(spec.joint_cov);
      const Matrix root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
      Matrix z(n, dim);
      Rng rng(seed);
      std::normal_distribution<double> normal;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < dim; ++c) z(i, c) = normal(rng);
      }
      const Matrix s = z * root.transpose();
      ModelSample out;
      out.samples.x = s.leftCols(spec.dx);
      out.samples.y = s.rightCols(dim - spec.dx);
      out.raw = out.samples;
      out.rotation_x = Matrix::Identity(spec.dx, spec.dx);
      out.rotation_y = Matrix::Identity(dim - spec.dx, dim - spec.dx);
      out.true_mi = model_true_mi(spec);
      return out;
    }
  }
  throw UnsupportedModelError("unsupported model family");
}

double model_true_mi(const ModelSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case ModelFamily::Gm1d: return gm1d_true_mi(spec.mu_z, spec.eps, spec.p).nats;
    case ModelFamily::GmMv: return spec.d * gm1d_true_mi(spec.mu_z, spec.eps, spec.p).nats;
    case ModelFamily::MvgScramble: return 0.5 * spec.d * kLn2;
    case ModelFamily::ExpGamma: return spec.d * kEulerGamma;
    case ModelFamily::Gaussian: {
      const auto dx = spec.dx;
      const auto dy = spec.joint_cov.rows() - dx;
      CovarianceBlocks b{spec.joint_cov.topLeftCorner(dx, dx), spec.joint_cov.bottomRightCorner(dy, dy),
                         spec.joint_cov.topRightCorner(dx, dy)};
      return gaussian_mi_bound(b);
    }
  }
  throw UnsupportedModelError("unsupported model family");
}

PairedSamples unscramble(const ModelSpec& spec, const ModelSample& sample) {
  PairedSamples out = sample.samples;
  switch (spec.family) {
    case ModelFamily::MvgScramble:
      out.x = out.x.unaryExpr([](double t) { return mirror_transform(t, -1.0, 1.0); });
      out.y = out.y.unaryExpr([](double t) { return mirror_transform(t, -1.0, 1.0); });
      break;
    case ModelFamily::ExpGamma:
      out.x = (out.x * sample.rotation_x).unaryExpr([](double t) { return mirror_transform(t, 0.0, 2.0); });
      out.y = (out.y * sample.rotation_y).unaryExpr([](double t) { return mirror_transform(t, 0.0, 2.0); });
      break;
    default:
      break;
  }
  return out;
}

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double log_mixture_pdf(double y, double w1, double m1, double s1, double w2, double m2, double s2) {
  const double l1 = w1 > 0.0 ? std::log(w1) + log_normal_pdf(y, m1, s1) : -INFINITY;
  const double l2 = w2 > 0.0 ? std::log(w2) + log_normal_pdf(y, m2, s2) : -INFINITY;
  const double hi = std::max(l1, l2);
  return hi + std::log(std::exp(l1 - hi) + std::exp(l2 - hi));
}

double integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& cuts) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 10, 1e-11);
  }
  return total;
}

const std::vector<double> kStdCuts{-12.0, -8.0, -5.0, -3.0, -1.5, 0.0, 1.5, 3.0, 5.0, 8.0, 12.0};

// Entropy of w1 N(m1, s1^2) + w2 N(m2, s2^2), nats, as the weighted sum of
// E_c[-ln f] over each component in its own standardized coordinate.
double mixture_entropy(double w1, double m1, double s1, double w2, double m2, double s2) {
  if (w2 <= 0.0) return 0.5 * std::log(2.0 * M_PI * M_E * s1 * s1);
  if (w1 <= 0.0) return 0.5 * std::log(2.0 * M_PI * M_E * s2 * s2);
  auto part = [&](double m, double s) {
    auto f = [&](double t) {
      return std::exp(log_normal_pdf(t, 0.0, 1.0)) * -log_mixture_pdf(m + s * t, w1, m1, s1, w2, m2, s2);
    };
    return integrate_pieces(f, kStdCuts);
  };
  return w1 * part(m1, s1) + w2 * part(m2, s2);
}

}  // namespace

MiResult gm1d_true_mi(double mu_z, double eps, double p, bool cached) {
  if (!(eps > 0.0) || !(p >= 0.0 && p <= 1.0)) throw ParameterError("gm1d_true_mi: eps > 0, p in [0,1]");
  static std::mutex mutex;
  static std::map<std::tuple<double, double, double>, MiResult> cache;
  if (cached) {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find({mu_z, eps, p});
    if (it != cache.end()) return it->second;
  }
  MiResult r;
  r.closed_form = p * 0.5 * std::log((1.0 + eps * eps) / (eps * eps));
  const double hy = mixture_entropy(p, 0.0, std::sqrt(1.0 + eps * eps), 1.0 - p, mu_z, 1.0);
  auto inner = [&](double x) {
    return std::exp(log_normal_pdf(x, 0.0, 1.0)) * mixture_entropy(p, x, eps, 1.0 - p, mu_z, 1.0);
  };
  std::vector<double> cuts = kStdCuts;
  for (double t : {-3.0, 0.0, 3.0}) {
    if (mu_z + t > -12.0 && mu_z + t < 12.0) cuts.push_back(mu_z + t);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const double hyx = integrate_pieces(inner, cuts);
  r.nats = std::max(0.0, hy - hyx);
  std::lock_guard<std::mutex> lock(mutex);
  cache.emplace(std::make_tuple(mu_z, eps, p), r);
  return r;
}

}  // namespace gaussbound
