#include "gaussbound/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

#include "gaussbound/pipeline.hpp"

namespace gaussbound {

bool ExperimentReport::pass() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

CheckRow within(std::string name, double v, double target, double tol) {
  return {std::move(name), v, fmt("%g +- %g", target, tol), std::abs(v - target) <= tol};
}

CheckRow at_least(std::string name, double v, double lo) { return {std::move(name), v, fmt(">= %g", lo), v >= lo}; }

CheckRow at_most(std::string name, double v, double hi) { return {std::move(name), v, fmt("<= %g", hi), v <= hi}; }

CheckRow holds(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, "true", ok}; }

// Runs body and appends a runtime row against the budget.
ExperimentReport timed(std::string id, std::string title, double budget_s,
                       const std::function<void(std::vector<CheckRow>&)>& body) {
  ExperimentReport r;
  r.id = std::move(id);
  r.title = std::move(title);
  const auto t0 = Clock::now();
  body(r.rows);
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0.0) r.rows.push_back(at_most("runtime [s]", r.seconds, budget_s));
  return r;
}

constexpr double kMuZ = 10.0;
constexpr double kEps = 0.1;
constexpr Eigen::Index kN = 10000;

AgcePair fit_agce(const PairedSamples& s, std::uint64_t seed) {
  AgceOptions o;
  o.n_restarts = 8;
  return agce_fit_1d(s, o, seed);
}

void c1(std::vector<CheckRow>& rows, std::uint64_t seed) {
  const auto s = gm1d_sample(100000, kMuZ, kEps, seed);
  rows.push_back(within("corr(X,Y), n=1e5", correlation(s.samples.x.col(0), s.samples.y.col(0)), 0.098, 0.010));
}

void c2(std::vector<CheckRow>& rows) {
  rows.push_back(within("I(X;Y) [bits]", nats_to_bits(gm1d_true_mi(kMuZ, kEps, 0.5, false).nats), 1.66, 0.02));
}

void c3(std::vector<CheckRow>& rows, std::uint64_t seed) {
  const auto s = gm1d_sample(kN, kMuZ, kEps, seed);
  const auto p = naive_gaussianize_1d(s.samples, seed);
  rows.push_back(within("naive rho", p.rho, 0.288, 0.03));
  rows.push_back(within("naive I_g [bits]", nats_to_bits(agce_bound(p)), 0.063, 0.02));
}

void c4(std::vector<CheckRow>& rows, std::uint64_t seed) {
  const auto s = gm1d_sample(kN, kMuZ, kEps, seed);
  const auto ace = ace_fit(s.samples);
  const auto ub = ace_upper_bound(ace);
  rows.push_back(within("ACE rho_1", ace.rho[0], 0.703, 0.03));
  rows.push_back(within("ACE bound [bits]", nats_to_bits(ub.nats), 0.4917, 0.05));
  rows.push_back(holds("I(X;Y) > ACE bound (no lossless Gaussian)", lossless_gaussian_impossible(s.true_mi, ub.nats)));
}

void c5(std::vector<CheckRow>& rows, std::uint64_t seed) {
  const auto s = gm1d_sample(kN, kMuZ, kEps, seed);
  const auto p = fit_agce(s.samples, seed);
  const auto ace = ace_fit(s.samples);
  rows.push_back(at_least("AGCE rho (best of 8)", p.rho, 0.60));
  rows.push_back(at_least("AGCE I_g [bits]", nats_to_bits(agce_bound(p)), 0.36));
  rows.push_back(at_most("AGCE rho - ACE rho_1", p.rho - ace.rho[0], 0.02));
}

void c6(std::vector<CheckRow>& rows, std::uint64_t seed) {
  const auto s = gm1d_sample(kN, kMuZ, kEps, seed);
  const auto off = offshelf_lower_1d(s.samples, {}, seed);
  const auto p = fit_agce(s.samples, seed);
  rows.push_back(within("off-shelf rho", off.rho, 0.646, 0.03));
  rows.push_back(within("off-shelf I_g [bits]", nats_to_bits(agce_bound(off)), 0.389, 0.05));
  rows.push_back(at_most("off-shelf rho - AGCE rho", off.rho - p.rho, 0.0));
}

double separate_bound(const Matrix& a, const Matrix& b, std::uint64_t seed) {
  const auto sa = separate_gaussianize(a, {}, derive_seed(seed, 0));
  const auto sb = separate_gaussianize(b, {}, derive_seed(seed, 1));
  return joint_objective(sa.block, sb.block).nats;
}

void c7(std::vector<CheckRow>& rows, std::uint64_t seed) {
  for (int d = 1; d <= 5; ++d) {
    const auto s = mvg_scramble_sample(kN, d, derive_seed(seed, static_cast<std::uint64_t>(d)));
    const auto ace = ace_fit(s.samples);
    rows.push_back(at_least("d=" + std::to_string(d) + " ACE bound / I(X;Y)", ace_upper_bound(ace).nats / s.true_mi, 0.90));
    rows.push_back(at_most("d=" + std::to_string(d) + " naive bound / I(X;Y)",
                           separate_bound(s.samples.x, s.samples.y, seed) / s.true_mi, 0.40));
  }
}

void c8(std::vector<CheckRow>& rows, std::uint64_t seed) {
  int wins = 0;
  double worst_ratio = 1e9;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const std::uint64_t si = seed + i;
    const auto s = expgamma_sample(kN, 2, si);
    const auto ace = ace_fit(s.samples);
    const double sep = separate_bound(ace.u, ace.v, si);
    const auto bt = biterminal_gaussianize(ace.u, ace.v, {}, si);
    const double bi = joint_objective(bt.u, bt.v).nats;
    if (bi >= sep) ++wins;
    worst_ratio = std::min(worst_ratio, ace_upper_bound(ace).nats / s.true_mi);
  }
  rows.push_back(at_least("seeds with bi-terminal >= separate (of 10)", wins, 9));
  rows.push_back(at_least("min ACE bound / I(X;Y)", worst_ratio, 0.50));
}

void c9(std::vector<CheckRow>& rows) {
  const auto pmf = quadrature_discretize(ModelSpec::gaussian_pair(0.6), 30);
  const auto curve = reverse_anneal(pmf, default_anneal_schedule());
  Matrix c(1, 1), cxy(1, 1);
  c << 1.0;
  cxy << 0.6;
  const auto spec = gib_spectrum(c, c, cxy);
  const auto ref = gib_curve(spec, default_beta_grid(spec, 400));
  double worst = 0.0;
  int matched = 0;
  for (const auto& p : curve.points) {
    if (p.itx < 0.05 || p.itx > 1.0) continue;
    worst = std::max(worst, std::abs(p.ity - curve_ity_at(ref, p.itx)));
    ++matched;
  }
  rows.push_back(at_least("matched points in I_TX [0.05, 1]", matched, 5));
  rows.push_back(at_most("max |dI_TY| [nats]", worst, 0.02));
}

void curve_ordering(std::vector<CheckRow>& rows, const ModelSpec& model, const PairedSamples& s, int m,
                    std::uint64_t seed) {
  const auto fit = run_method(s, Method::Agce, {}, seed);
  CurveOptions co;
  co.quadrature_m = m;
  const auto b = build_curves(s, fit, &model, co);
  rows.push_back(at_most("naive GIB above GIB-on-AGCE [nats]", curve_violation(b.naive, b.method), 0.0));
  rows.push_back(at_most("GIB-on-AGCE above discrete reference [nats]", curve_violation(b.method, *b.reference), 0.02));
}

void c10(std::vector<CheckRow>& rows, std::uint64_t seed) {
  const auto s = gm1d_sample(kN, kMuZ, kEps, seed);
  curve_ordering(rows, ModelSpec::gm1d(kMuZ, kEps), s.samples, 32, seed);
}

bool rank_exact(VectorRef v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return s == normal_scores(s.size());
}

void c11(std::vector<CheckRow>& rows, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Vector x(2000);
  for (auto& t : x) t = nd(rng);
  const auto g = marginal_gaussianize(x, seed);
  rows.push_back(holds("marginal Gaussianization rank-exact", rank_exact(g.values)));
  const Vector ex = x.array().exp() + 3.0 * x.array();
  rows.push_back(holds("monotone invariance", marginal_gaussianize(ex, seed).values == g.values));

  const auto gm = gm1d_sample(3000, kMuZ, kEps, seed);
  AgceOptions ao;
  ao.n_restarts = 2;
  const auto p = agce_fit_1d(gm.samples, ao, seed);
  bool mono = true;
  for (std::size_t i = 1; i < p.trace.size(); ++i) mono = mono && p.trace[i] >= p.trace[i - 1];
  rows.push_back(holds("AGCE trace nondecreasing", mono));
  rows.push_back(holds("AGCE output rank-exact", rank_exact(p.u) && rank_exact(p.v)));

  const auto e = expgamma_sample(1000, 2, seed);
  BiterminalOptions bo;
  bo.outer_iters = 3;
  bo.inner_tries = 15;
  const auto bt = biterminal_gaussianize(e.samples.x, e.samples.y, bo, seed);
  bool acc_mono = true;
  for (const auto& a : bt.accepted) {
    for (std::size_t i = 1; i < a.size(); ++i) acc_mono = acc_mono && a[i] > a[i - 1];
  }
  rows.push_back(holds("hill-climb accepted objectives increasing", acc_mono));

  double min_bound = 1e300, worst_inv = 0.0;
  for (int t = 0; t < 20; ++t) {
    Matrix z(6, 6);
    for (auto& v : z.reshaped()) v = nd(rng);
    const Matrix c = z * z.transpose() + 0.1 * Matrix::Identity(6, 6);
    CovarianceBlocks b{c.topLeftCorner(3, 3), c.bottomRightCorner(3, 3), c.topRightCorner(3, 3)};
    const double base = gaussian_mi_bound(b);
    min_bound = std::min(min_bound, base);
    Matrix a(3, 3), bm(3, 3);
    for (auto& v : a.reshaped()) v = nd(rng);
    for (auto& v : bm.reshaped()) v = nd(rng);
    a += 3.0 * Matrix::Identity(3, 3);
    bm += 3.0 * Matrix::Identity(3, 3);
    CovarianceBlocks tb{a * b.cu * a.transpose(), bm * b.cv * bm.transpose(), a * b.cuv * bm.transpose()};
    worst_inv = std::max(worst_inv, std::abs(gaussian_mi_bound(tb) - base));
  }
  rows.push_back(at_least("min Gaussian bound on random covariances", min_bound, 0.0));
  rows.push_back(at_most("Gaussian bound change under linear maps", worst_inv, 1e-8));

  Matrix c(3, 3), cy(2, 2), cxy(3, 2);
  c << 2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5;
  cy << 1.0, 0.4, 0.4, 2.0;
  cxy << 0.5, 0.2, 0.1, 0.6, 0.3, 0.1;
  const auto spec = gib_spectrum(c, cy, cxy);
  const auto gc = check_curve(gib_curve(spec, default_beta_grid(spec, 200)), 1e-9);
  rows.push_back(holds("GIB curve DPI, monotone, concave", gc.dpi && gc.monotone && gc.concave));
  const auto ac = check_curve(reverse_anneal(quadrature_discretize(ModelSpec::gaussian_pair(0.5), 16),
                                             default_anneal_schedule(30)), 1e-6);
  rows.push_back(holds("annealed curve DPI and concave", ac.dpi && ac.concave));

  std::gamma_distribution<double> gam(0.5, 1.0);
  std::uniform_int_distribution<int> pick(0, 2);
  double worst_lemma = 0.0;
  const auto sched = default_anneal_schedule(40);
  for (int t = 0; t < 10; ++t) {
    Matrix pm(4, 4);
    for (auto& v : pm.reshaped()) v = gam(rng) + 1e-6;
    const auto j = JointPmf::from_matrix(pm);
    Matrix merged = Matrix::Zero(4, 3);
    for (int y = 0; y < 4; ++y) merged.col(pick(rng)) += j.p.col(y);
    const auto full = reverse_anneal(j, sched);
    const auto coarse = reverse_anneal(JointPmf::from_matrix(merged), sched);
    worst_lemma = std::max(worst_lemma, curve_violation(coarse, full));
  }
  rows.push_back(at_most("IB data-processing lemma violation (4x4 pmfs) [nats]", worst_lemma, 2e-3));
}

void kcca_rows(std::vector<CheckRow>& rows, std::uint64_t seed) {
  for (int d = 6; d <= 10; ++d) {
    const auto s = mvg_scramble_sample(kN, d, derive_seed(seed, static_cast<std::uint64_t>(d)));
    PipelineOptions o;
    o.with_upper = false;
    const auto r = run_method(s.samples, Method::Kcca, o, seed);
    const double ratio = r.lower.nats / s.true_mi;
    rows.push_back({"d=" + std::to_string(d) + " KCCA bound / I(X;Y)", ratio, "in [0, 1.05]", ratio >= 0.0 && ratio <= 1.05});
  }
}

void gm_rows(std::vector<CheckRow>& rows, std::uint64_t seed) {
  for (int d = 1; d <= 5; ++d) {
    const auto s = gm_mv_sample(kN, d, kMuZ, kEps, derive_seed(seed, static_cast<std::uint64_t>(d)));
    const auto ace = ace_fit(s.samples);
    const double ub = ace_upper_bound(ace).nats;
    rows.push_back(holds("d=" + std::to_string(d) + " I(X;Y) > ACE bound", lossless_gaussian_impossible(s.true_mi, ub)));
    rows.push_back({"d=" + std::to_string(d) + " ACE bound / I(X;Y)", ub / s.true_mi, "< 1", ub < s.true_mi});
  }
}

void exp_curve_rows(std::vector<CheckRow>& rows, std::uint64_t seed) {
  ModelSpec m;
  m.family = ModelFamily::ExpGamma;
  m.d = 1;
  const auto s = expgamma_sample(kN, 1, seed);
  curve_ordering(rows, m, s.samples, 30, seed);
}

}  // namespace

ExperimentReport run_criterion(int number, std::uint64_t seed) {
  switch (number) {
    case 1: return timed("1", "mixture model correlation", 1.0, [&](auto& r) { c1(r, seed); });
    case 2: return timed("2", "mixture model mutual information", 5.0, [&](auto& r) { c2(r); });
    case 3: return timed("3", "naive Gaussianization benchmark", 5.0, [&](auto& r) { c3(r, seed); });
    case 4: return timed("4", "ACE upper bound", 30.0, [&](auto& r) { c4(r, seed); });
    case 5: return timed("5", "AGCE lower bound", 180.0, [&](auto& r) { c5(r, seed); });
    case 6: return timed("6", "off-shelf lower bound", 60.0, [&](auto& r) { c6(r, seed); });
    case 7: return timed("7", "scrambled Gaussian model, d = 1..5", 300.0, [&](auto& r) { c7(r, seed); });
    case 8: return timed("8", "exponential model, d = 2, 10 seeds", 600.0, [&](auto& r) { c8(r, seed); });
    case 9: return timed("9", "GIB vs discrete IB", 120.0, [&](auto& r) { c9(r); });
    case 10: return timed("10", "IB curve ordering on the mixture model", 600.0, [&](auto& r) { c10(r, seed); });
    case 11: return timed("11", "property suite", 600.0, [&](auto& r) { c11(r, seed); });
    default: throw ParameterError("criterion number must be 1..11");
  }
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"sec4.4", "sec5.4-gauss", "sec5.4-exp", "sec5.4-gm", "sec6.1-exp", "sec6.1-gm"};
  return ids;
}

ExperimentReport run_experiment(const std::string& id, std::uint64_t seed) {
  auto merge = [&](std::string title, std::vector<int> criteria, const std::function<void(std::vector<CheckRow>&)>& extra) {
    ExperimentReport out;
    out.id = id;
    out.title = std::move(title);
    const auto t0 = Clock::now();
    for (const int c : criteria) {
      auto r = run_criterion(c, seed);
      for (auto& row : r.rows) {
        if (row.name.rfind("runtime", 0) == 0) continue;
        out.rows.push_back(std::move(row));
      }
    }
    if (extra) extra(out.rows);
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
  };
  if (id == "sec4.4") return merge("scalar Gaussian mixture model", {1, 2, 3, 4, 5, 6}, nullptr);
  if (id == "sec5.4-gauss") return merge("scrambled Gaussian model", {7}, [&](auto& r) { kcca_rows(r, seed); });
  if (id == "sec5.4-exp") return merge("exponential model", {8}, nullptr);
  if (id == "sec5.4-gm") return merge("multivariate Gaussian mixture model", {}, [&](auto& r) { gm_rows(r, seed); });
  if (id == "sec6.1-gm") return merge("IB curves, mixture model", {10}, nullptr);
  if (id == "sec6.1-exp") return merge("IB curves, exponential model", {}, [&](auto& r) { exp_curve_rows(r, seed); });
  std::string valid;
  for (const auto& v : experiment_ids()) valid += (valid.empty() ? "" : ", ") + v;
  throw ParameterError("unknown experiment '" + id + "' (valid: " + valid + ")");
}

std::string format_report(const ExperimentReport& report) {
  std::ostringstream os;
  os << report.id << ": " << report.title << "\n";
  for (const auto& r : report.rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "  %-4s %-52s %14.6g  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                  r.expected.c_str());
    os << buf;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "  %s in %.1f s\n", report.pass() ? "PASS" : "FAIL", report.seconds);
  os << buf;
  return os.str();
}

}  // namespace gaussbound
