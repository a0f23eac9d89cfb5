#include "gaussbound/pipeline.hpp"

#include <algorithm>

namespace gaussbound {

std::string method_name(Method m) {
  switch (m) {
    case Method::Ace: return "ace";
    case Method::Agce: return "agce";
    case Method::Offshelf: return "offshelf";
    case Method::Biterminal: return "biterminal";
    case Method::Kcca: return "kcca";
    case Method::Naive: return "naive";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (const Method m : {Method::Ace, Method::Agce, Method::Offshelf, Method::Biterminal, Method::Kcca, Method::Naive}) {
    if (method_name(m) == name) return m;
  }
  throw ParameterError("unknown method '" + name + "' (expected ace, agce, offshelf, biterminal, kcca, naive)");
}

namespace {

void require_scalar(const PairedSamples& s, Method m) {
  if (s.dx() != 1 || s.dy() != 1) {
    throw ParameterError("method " + method_name(m) + " needs scalar X and Y; use ace, biterminal or kcca for d > 1");
  }
}

Vector w2_columns(const Matrix& b) {
  Vector w(b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) w[j] = w2_to_normal(b.col(j));
  return w;
}

}  // namespace

PipelineResult run_method(const PairedSamples& samples, Method method, const PipelineOptions& options,
                          std::uint64_t seed) {
  samples.validate();
  const int k = options.k > 0 ? options.k : static_cast<int>(std::min(samples.dx(), samples.dy()));
  PipelineResult out;
  out.method = method;

  AceOptions ao;
  ao.k = k;
  ao.smoother = options.smoother;
  std::optional<CanonicalModel> ace;
  auto fit_ace = [&]() -> const CanonicalModel& {
    if (!ace) ace = ace_fit(samples, ao);
    return *ace;
  };
  auto separate = [&](const Matrix& a, const Matrix& b) {
    auto sa = separate_gaussianize(a, {}, derive_seed(seed, 0));
    auto sb = separate_gaussianize(b, {}, derive_seed(seed, 1));
    out.u = std::move(sa.block);
    out.v = std::move(sb.block);
    out.converged = sa.chain.converged && sb.chain.converged;
  };

  switch (method) {
    case Method::Ace: {
      const auto& m = fit_ace();
      separate(m.u, m.v);
      break;
    }
    case Method::Biterminal: {
      const auto& m = fit_ace();
      auto r = biterminal_gaussianize(m.u, m.v, options.biterminal, seed);
      out.u = std::move(r.u);
      out.v = std::move(r.v);
      out.converged = r.converged;
      if (!r.converged) out.notes.push_back("bi-terminal normality probe did not pass; best iterate returned");
      break;
    }
    case Method::Agce: {
      require_scalar(samples, method);
      AgceOptions o;
      o.smoother = options.smoother;
      o.tol = options.agce_tol;
      o.max_iter = options.agce_max_iter;
      o.n_restarts = options.restarts;
      auto p = agce_fit_1d(samples, o, seed);
      out.u = p.u;
      out.v = p.v;
      out.converged = p.converged;
      if (p.independent_fit) out.notes.push_back("independent fit: conditional mean constant");
      break;
    }
    case Method::Offshelf: {
      require_scalar(samples, method);
      auto p = offshelf_lower_1d(samples, options.smoother, seed);
      out.u = p.u;
      out.v = p.v;
      break;
    }
    case Method::Naive: {
      if (samples.dx() == 1 && samples.dy() == 1) {
        auto p = naive_gaussianize_1d(samples, seed);
        out.u = p.u;
        out.v = p.v;
      } else {
        separate(samples.x, samples.y);
      }
      break;
    }
    case Method::Kcca: {
      KccaOptions ko = options.kcca;
      ko.k = k;
      ko.seed = seed;
      const auto m = kcca_fit(samples, ko);
      separate(m.u, m.v);
      break;
    }
  }

  out.lower = joint_objective(out.u, out.v);
  out.rho = canonical_correlations(CovarianceBlocks::from_samples(out.u, out.v));
  if (method != Method::Kcca && (options.with_upper || ace)) out.upper = ace_upper_bound(fit_ace());
  out.w2_u = w2_columns(out.u);
  out.w2_v = w2_columns(out.v);
  return out;
}

IBCurve gib_curve_from_samples(const Matrix& u, const Matrix& v, int grid_points) {
  const auto spec = gib_spectrum(CovarianceBlocks::from_samples(u, v));
  return gib_curve(spec, default_beta_grid(spec, grid_points));
}

CurveBundle build_curves(const PairedSamples& samples, const PipelineResult& fitted, const ModelSpec* model,
                         const CurveOptions& options) {
  CurveBundle b;
  b.method = gib_curve_from_samples(fitted.u, fitted.v, options.grid_points);
  b.naive = gib_curve_from_samples(samples.x, samples.y, options.grid_points);
  if (model && options.reference) {
    const auto pmf = quadrature_discretize(*model, options.quadrature_m);
    b.reference_fallback = pmf.quantile_fallback;
    b.reference = reverse_anneal(pmf, options.anneal_schedule.empty() ? default_anneal_schedule() : options.anneal_schedule);
  }
  return b;
}

double curve_violation(const IBCurve& below, const IBCurve& above) {
  double worst = 0.0;
  for (const auto& p : below.points) worst = std::max(worst, p.ity - curve_ity_at(above, p.itx));
  return worst;
}

}  // namespace gaussbound
