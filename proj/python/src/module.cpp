#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gaussbound/experiments.hpp"
#include "gaussbound/pipeline.hpp"

namespace py = pybind11;
using namespace gaussbound;
using namespace pybind11::literals;

namespace {

PairedSamples paired(const Matrix& x, const Matrix& y) {
  PairedSamples s{x, y};
  s.validate();
  return s;
}

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Accepts 1-D arrays as single columns.
Matrix as_block(const Array& a) {
  if (a.ndim() == 1) {
    Matrix m(a.shape(0), 1);
    for (py::ssize_t i = 0; i < a.shape(0); ++i) m(i, 0) = a.at(i);
    return m;
  }
  if (a.ndim() != 2) throw ParameterError("expected a 1-D or 2-D array");
  Matrix m(a.shape(0), a.shape(1));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = a.at(i, j);
  }
  return m;
}

SmootherConfig smoother_config(const std::string& kind, int k, double bandwidth) {
  SmootherConfig c;
  if (kind == "kernel") {
    c.kind = SmootherKind::Kernel;
  } else if (kind != "knn") {
    throw ParameterError("smoother must be 'knn' or 'kernel'");
  }
  c.k = k;
  c.bandwidth = bandwidth;
  return c;
}

Matrix curve_array(const IBCurve& c) {
  Matrix m(static_cast<Eigen::Index>(c.points.size()), 3);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = c.points[i].beta;
    m(r, 1) = c.points[i].itx;
    m(r, 2) = c.points[i].ity;
  }
  return m;
}

py::dict report_dict(const ExperimentReport& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    rows.append(py::dict("name"_a = row.name, "value"_a = row.value, "expected"_a = row.expected, "pass"_a = row.pass));
  }
  return py::dict("id"_a = r.id, "title"_a = r.title, "passed"_a = r.pass(), "seconds"_a = r.seconds, "rows"_a = rows);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian lower bounds on mutual information and information bottleneck curves.";

  auto base = py::register_exception<Error>(m, "GaussboundError");
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());
  py::register_exception<InvalidCovarianceError>(m, "InvalidCovarianceError", base.ptr());
  py::register_exception<ConditioningError>(m, "ConditioningError", base.ptr());
  py::register_exception<UnsupportedModelError>(m, "UnsupportedModelError", base.ptr());

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](const std::string& family, int d, double mu_z, double eps, double p, std::uint64_t rotation_seed,
                       double rho) {
             if (parse_family(family) == ModelFamily::Gaussian) return ModelSpec::gaussian_pair(rho);
             ModelSpec s;
             s.family = parse_family(family);
             s.d = d;
             s.mu_z = mu_z;
             s.eps = eps;
             s.p = p;
             s.rotation_seed = rotation_seed;
             s.validate();
             return s;
           }),
           "family"_a = "gm1d", "d"_a = 1, "mu_z"_a = 10.0, "eps"_a = 0.1, "p"_a = 0.5, "rotation_seed"_a = 1234,
           "rho"_a = 0.5)
      .def_property_readonly("family", [](const ModelSpec& s) { return family_name(s.family); })
      .def_readonly("d", &ModelSpec::d)
      .def_readonly("mu_z", &ModelSpec::mu_z)
      .def_readonly("eps", &ModelSpec::eps)
      .def_readonly("p", &ModelSpec::p)
      .def_property_readonly("x_dim", &ModelSpec::x_dim)
      .def_property_readonly("y_dim", &ModelSpec::y_dim)
      .def("__repr__", [](const ModelSpec& s) { return "ModelSpec(family='" + family_name(s.family) + "')"; });

  m.def(
      "sample_model",
      [](const ModelSpec& spec, Eigen::Index n, std::uint64_t seed) {
        ModelSample s;
        {
          py::gil_scoped_release release;
          s = sample_model(spec, n, seed);
        }
        return py::dict("x"_a = s.samples.x, "y"_a = s.samples.y, "true_mi"_a = s.true_mi);
      },
      "spec"_a, "n"_a, "seed"_a = 0, "Draws n pairs; true_mi is in nats.");
  m.def("model_true_mi", &model_true_mi, "spec"_a);
  m.def(
      "gm1d_true_mi", [](double mu_z, double eps, double p) { return gm1d_true_mi(mu_z, eps, p).nats; },
      "mu_z"_a = 10.0, "eps"_a = 0.1, "p"_a = 0.5);
  m.def("nats_to_bits", &nats_to_bits);

  m.def(
      "marginal_gaussianize", [](const Vector& x, std::uint64_t seed) { return marginal_gaussianize(x, seed).values; },
      "x"_a, "seed"_a = 0, "Rank-based map onto N(0,1) scores, random tie breaking.");
  m.def(
      "gaussian_bound",
      [](const Array& u, const Array& v) { return joint_objective(as_block(u), as_block(v)).nats; }, "u"_a, "v"_a,
      "Gaussian mutual information of the sample covariance of (u, v), nats.");

  m.def(
      "ace_fit",
      [](const Array& x, const Array& y, int k, const std::string& smoother, int smoother_k, double tol, int max_iter,
         std::uint64_t seed) {
        AceOptions o;
        o.k = k;
        o.smoother = smoother_config(smoother, smoother_k, 0.0);
        o.tol = tol;
        o.max_iter = max_iter;
        o.seed = seed;
        const auto s = paired(as_block(x), as_block(y));
        CanonicalModel fit;
        {
          py::gil_scoped_release release;
          fit = ace_fit(s, o);
        }
        return py::dict("u"_a = fit.u, "v"_a = fit.v, "rho"_a = fit.rho, "upper_bound"_a = ace_upper_bound(fit).nats,
                        "converged"_a = fit.converged);
      },
      "x"_a, "y"_a, "k"_a = 0, "smoother"_a = "knn", "smoother_k"_a = 0, "tol"_a = 1e-5, "max_iter"_a = 200,
      "seed"_a = 0);

  m.def(
      "agce_fit_1d",
      [](const Vector& x, const Vector& y, int restarts, std::uint64_t seed) {
        AgceOptions o;
        o.n_restarts = restarts;
        const auto s = paired(x, y);
        AgcePair p;
        {
          py::gil_scoped_release release;
          p = agce_fit_1d(s, o, seed);
        }
        return py::dict("u"_a = p.u, "v"_a = p.v, "rho"_a = p.rho, "lower_bound"_a = agce_bound(p),
                        "trace"_a = p.trace, "restart_rho"_a = p.restart_rho, "converged"_a = p.converged);
      },
      "x"_a, "y"_a, "restarts"_a = 8, "seed"_a = 0);

  m.def(
      "run_method",
      [](const Array& x, const Array& y, const std::string& method, std::uint64_t seed, int restarts, int k,
         bool with_upper) {
        PipelineOptions o;
        o.restarts = restarts;
        o.k = k;
        o.with_upper = with_upper;
        const auto s = paired(as_block(x), as_block(y));
        const Method meth = parse_method(method);
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_method(s, meth, o, seed);
        }
        py::object upper = py::none();
        if (r.upper) upper = py::float_(r.upper->nats);
        return py::dict("method"_a = method_name(r.method), "u"_a = r.u, "v"_a = r.v, "rho"_a = r.rho,
                        "lower_bound"_a = r.lower.nats, "upper_bound"_a = upper, "w2_u"_a = r.w2_u, "w2_v"_a = r.w2_v,
                        "converged"_a = r.converged);
      },
      "x"_a, "y"_a, "method"_a = "agce", "seed"_a = 0, "restarts"_a = 8, "k"_a = 0, "with_upper"_a = true,
      "Method transform followed by the Gaussian bound. Bounds are in nats.");

  m.def(
      "gib_curve",
      [](const Array& u, const Array& v, int grid_points) {
        return curve_array(gib_curve_from_samples(as_block(u), as_block(v), grid_points));
      },
      "u"_a, "v"_a, "grid_points"_a = 200, "Rows (beta, I(T;X), I(T;Y)) in nats.");
  m.def(
      "gib_spectrum",
      [](const Matrix& cx, const Matrix& cy, const Matrix& cxy) {
        const auto s = gib_spectrum(cx, cy, cxy);
        return py::dict("lambda"_a = s.lambda, "beta_crit"_a = s.beta_crit, "total_information"_a =
                                                                                 gib_total_information(s));
      },
      "cx"_a, "cy"_a, "cxy"_a);

  m.def("discrete_mi", [](const Matrix& p) { return discrete_mi(JointPmf::from_matrix(p)); }, "p"_a);
  m.def(
      "quadrature_discretize",
      [](const ModelSpec& spec, int m_nodes) {
        const auto j = quadrature_discretize(spec, m_nodes);
        return py::dict("p"_a = j.p, "x_nodes"_a = j.x_nodes, "y_nodes"_a = j.y_nodes,
                        "quantile_fallback"_a = j.quantile_fallback);
      },
      "spec"_a, "m"_a = 32);
  m.def("default_anneal_schedule", &default_anneal_schedule, "count"_a = 60, "hi"_a = 200.0, "lo"_a = 0.8);
  m.def(
      "reverse_anneal",
      [](const Matrix& p, std::vector<double> schedule) {
        if (schedule.empty()) schedule = default_anneal_schedule();
        const auto joint = JointPmf::from_matrix(p);
        IBCurve c;
        {
          py::gil_scoped_release release;
          c = reverse_anneal(joint, schedule);
        }
        return curve_array(c);
      },
      "p"_a, "schedule"_a = std::vector<double>{},
      "Discrete IB curve of a joint pmf, schedule in descending beta. Rows (beta, I(T;X), I(T;Y)) in nats.");

  m.def("experiment_ids", &experiment_ids);
  m.def(
      "run_criterion",
      [](int number, std::uint64_t seed) {
        ExperimentReport r;
        {
          py::gil_scoped_release release;
          r = run_criterion(number, seed);
        }
        return report_dict(r);
      },
      "number"_a, "seed"_a = 7);
}
