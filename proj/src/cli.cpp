#include "gaussbound/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaussbound/experiments.hpp"
#include "gaussbound/pipeline.hpp"

namespace gaussbound {

using Json = nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

PairedSamples read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ParameterError(path + ":1: empty file, expected a header x0,...,y0,...");
  const auto header = split_row(line);
  int dx = 0, dy = 0;
  for (const auto& h : header) {
    const bool is_x = h == "x" + std::to_string(dx) && dy == 0;
    const bool is_y = h == "y" + std::to_string(dy);
    if (is_x) {
      ++dx;
    } else if (is_y) {
      ++dy;
    } else {
      throw ParameterError(path + ":1: unexpected column '" + h + "'; header must be x0..x{dx-1},y0..y{dy-1}");
    }
  }
  if (dx == 0 || dy == 0) throw ParameterError(path + ":1: header needs at least one x and one y column");

  std::vector<double> values;
  Eigen::Index rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_row(line);
    if (fields.size() != header.size()) {
      throw ParameterError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      double v = 0.0;
      const char* b = f.data();
      const char* e = f.data() + f.size();
      while (b < e && *b == ' ') ++b;
      const auto r = std::from_chars(b, e, v);
      if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) {
        throw ParameterError(path + ":" + std::to_string(lineno) + ": not a finite number: '" + f + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  PairedSamples s;
  s.x.resize(rows, dx);
  s.y.resize(rows, dy);
  const auto w = static_cast<std::size_t>(dx + dy);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int j = 0; j < dx; ++j) s.x(i, j) = values[static_cast<std::size_t>(i) * w + static_cast<std::size_t>(j)];
    for (int j = 0; j < dy; ++j) s.y(i, j) = values[static_cast<std::size_t>(i) * w + static_cast<std::size_t>(dx + j)];
  }
  return s;
}

void write_samples_csv(const std::string& path, const PairedSamples& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::string buf;
  for (Eigen::Index j = 0; j < samples.dx(); ++j) buf += (j ? ",x" : "x") + std::to_string(j);
  for (Eigen::Index j = 0; j < samples.dy(); ++j) buf += ",y" + std::to_string(j);
  buf += '\n';
  for (Eigen::Index i = 0; i < samples.n(); ++i) {
    for (Eigen::Index j = 0; j < samples.dx(); ++j) {
      if (j) buf += ',';
      buf += format_double(samples.x(i, j));
    }
    for (Eigen::Index j = 0; j < samples.dy(); ++j) {
      buf += ',';
      buf += format_double(samples.y(i, j));
    }
    buf += '\n';
  }
  out << buf;
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

struct Args {
  std::string input;
  std::string model;
  double mu_z = 10.0;
  double eps = 0.1;
  double rho = 0.5;
  int d = 1;
  std::uint64_t rotation_seed = 1234;
  Eigen::Index n = 10000;
  std::string method = "agce";
  int restarts = 8;
  int k = 0;
  std::string smoother = "knn";
  int smoother_k = 0;
  double bandwidth = 0.0;
  std::uint64_t seed = 0;
  std::string units = "bits";
  std::string out;
  // curve
  int grid_points = 200;
  bool no_reference = false;
  int quadrature_m = 32;
  int anneal_points = 60;
  double beta_max = 200.0;
  double beta_min = 0.8;
  // reproduce
  std::string experiment;
};

ModelSpec model_from(const Args& a) {
  ModelSpec s;
  const ModelFamily f = parse_family(a.model);
  if (f == ModelFamily::Gaussian) {
    s = ModelSpec::gaussian_pair(a.rho);
  } else {
    s.family = f;
    s.d = a.d;
    s.mu_z = a.mu_z;
    s.eps = a.eps;
    s.rotation_seed = a.rotation_seed;
  }
  s.validate();
  return s;
}

Json model_json(const ModelSpec& s) {
  Json j;
  j["family"] = family_name(s.family);
  switch (s.family) {
    case ModelFamily::Gm1d:
    case ModelFamily::GmMv:
      j["d"] = s.family == ModelFamily::Gm1d ? 1 : s.d;
      j["mu_z"] = s.mu_z;
      j["eps"] = s.eps;
      j["p"] = s.p;
      break;
    case ModelFamily::MvgScramble: j["d"] = s.d; break;
    case ModelFamily::ExpGamma:
      j["d"] = s.d;
      j["rotation_seed"] = s.rotation_seed;
      break;
    case ModelFamily::Gaussian: j["rho"] = s.joint_cov(0, 1); break;
  }
  return j;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (const double x : v) a.push_back(x);
  return a;
}

double in_units(double nats, const std::string& units) { return units == "bits" ? nats_to_bits(nats) : nats; }

PipelineOptions pipeline_options(const Args& a) {
  PipelineOptions o;
  o.smoother.kind = a.smoother == "kernel" ? SmootherKind::Kernel : SmootherKind::Knn;
  o.smoother.k = a.smoother_k;
  o.smoother.bandwidth = a.bandwidth;
  o.k = a.k;
  o.restarts = a.restarts;
  return o;
}

struct Loaded {
  PairedSamples samples;
  std::optional<ModelSpec> model;
  std::optional<double> true_mi;
};

Loaded load(const Args& a) {
  Loaded l;
  if (!a.input.empty() == !a.model.empty()) throw ParameterError("give exactly one of --input and --model");
  if (!a.input.empty()) {
    l.samples = read_samples_csv(a.input);
  } else {
    l.model = model_from(a);
    auto s = sample_model(*l.model, a.n, a.seed);
    l.samples = std::move(s.samples);
    l.true_mi = s.true_mi;
  }
  l.samples.validate();
  return l;
}

Json config_json(const Args& a, const Loaded& l, const std::string& command) {
  Json c;
  c["command"] = command;
  if (l.model) {
    c["model"] = model_json(*l.model);
    c["n"] = a.n;
  } else {
    c["input"] = a.input;
  }
  c["method"] = a.method;
  c["seed"] = a.seed;
  c["restarts"] = a.restarts;
  c["k"] = a.k;
  c["smoother"] = {{"kind", a.smoother}, {"k", a.smoother_k}, {"bandwidth", a.bandwidth}};
  c["units"] = a.units;
  return c;
}

void emit(const Json& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("write to '" + path + "' failed");
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int cmd_bound(const Args& a, std::ostream& out) {
  const auto t0 = Clock::now();
  const auto l = load(a);
  auto r = run_method(l.samples, parse_method(a.method), pipeline_options(a), a.seed);
  Json j;
  j["schema"] = 1;
  j["config"] = config_json(a, l, "bound");
  Json res;
  res["units"] = a.units;
  res["n"] = l.samples.n();
  res["dx"] = l.samples.dx();
  res["dy"] = l.samples.dy();
  res["rho"] = vector_json(r.rho);
  res["lower_bound"] = in_units(r.lower.nats, a.units);
  res["lower_saturated"] = r.lower.saturated;
  if (r.upper) {
    res["upper_bound"] = in_units(r.upper->nats, a.units);
    res["upper_saturated"] = r.upper->saturated;
  } else {
    res["upper_bound"] = nullptr;
  }
  if (l.true_mi) {
    res["true_mi"] = in_units(*l.true_mi, a.units);
  } else {
    res["true_mi"] = nullptr;
  }
  // Without a known I(X;Y) the impossibility test has no evidence and reports false.
  res["lossless_gaussian_impossible"] = l.true_mi && r.upper && lossless_gaussian_impossible(*l.true_mi, r.upper->nats);
  res["w2_u"] = vector_json(r.w2_u);
  res["w2_v"] = vector_json(r.w2_v);
  res["converged"] = r.converged;
  res["notes"] = r.notes;
  j["result"] = res;
  j["timing"] = {{"wall_seconds", seconds_since(t0)}};
  emit(j, a.out, out);
  return kExitOk;
}

void write_curve_csv(const std::filesystem::path& p, const IBCurve& c, const std::string& units) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
  f << "beta,i_tx,i_ty\n";
  for (const auto& pt : c.points) {
    f << format_double(pt.beta) << ',' << format_double(in_units(pt.itx, units)) << ','
      << format_double(in_units(pt.ity, units)) << '\n';
  }
  if (!f) throw IoError("write to '" + p.string() + "' failed");
}

int cmd_curve(const Args& a, std::ostream& out) {
  const auto t0 = Clock::now();
  if (a.out.empty()) throw ParameterError("curve needs --out-dir");
  const auto l = load(a);
  const auto r = run_method(l.samples, parse_method(a.method), pipeline_options(a), a.seed);
  CurveOptions co;
  co.grid_points = a.grid_points;
  co.quadrature_m = a.quadrature_m;
  co.reference = !a.no_reference;
  co.anneal_schedule = default_anneal_schedule(a.anneal_points, a.beta_max, a.beta_min);
  const auto b = build_curves(l.samples, r, l.model ? &*l.model : nullptr, co);

  const std::filesystem::path dir(a.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + a.out + "': " + ec.message());
  write_curve_csv(dir / "method.csv", b.method, a.units);
  write_curve_csv(dir / "naive.csv", b.naive, a.units);
  Json files = {{"method", "method.csv"}, {"naive", "naive.csv"}};
  Json j;
  j["schema"] = 1;
  j["config"] = config_json(a, l, "curve");
  j["config"]["grid_points"] = a.grid_points;
  j["files"] = files;
  Json summary;
  summary["units"] = a.units;
  summary["lower_bound"] = in_units(r.lower.nats, a.units);
  summary["naive_below_method"] = in_units(curve_violation(b.naive, b.method), a.units);
  if (b.reference) {
    write_curve_csv(dir / "reference.csv", *b.reference, a.units);
    j["files"]["reference"] = "reference.csv";
    j["config"]["reference"] = {{"quadrature_m", a.quadrature_m},
                                {"anneal_points", a.anneal_points},
                                {"beta_max", a.beta_max},
                                {"beta_min", a.beta_min},
                                {"quantile_fallback", b.reference_fallback}};
    summary["method_above_reference"] = in_units(curve_violation(b.method, *b.reference), a.units);
    const auto& conv = b.reference->converged;
    summary["reference_unconverged_points"] = std::count(conv.begin(), conv.end(), false);
    summary["reference_envelope_applied"] = !b.reference->raw.empty();
  }
  j["summary"] = summary;
  j["timing"] = {{"wall_seconds", seconds_since(t0)}};
  emit(j, (dir / "manifest.json").string(), out);
  out << "wrote " << (dir / "manifest.json").string() << "\n";
  return kExitOk;
}

int cmd_gen(const Args& a, std::ostream& out) {
  if (a.model.empty()) throw ParameterError("gen needs --model");
  if (a.out.empty()) throw ParameterError("gen needs --out");
  const auto spec = model_from(a);
  const auto s = sample_model(spec, a.n, a.seed);
  write_samples_csv(a.out, s.samples);
  Json j;
  j["schema"] = 1;
  j["model"] = model_json(spec);
  j["n"] = a.n;
  j["seed"] = a.seed;
  j["true_mi"] = {{"nats", s.true_mi}, {"bits", nats_to_bits(s.true_mi)}};
  Json scramble;
  if (spec.family == ModelFamily::MvgScramble) {
    scramble["mirror"] = {-1.0, 1.0};
  } else if (spec.family == ModelFamily::ExpGamma) {
    scramble["mirror"] = {0.0, 2.0};
    scramble["rotation_x"] = matrix_json(s.rotation_x);
    scramble["rotation_y"] = matrix_json(s.rotation_y);
  }
  j["scramble"] = scramble;
  std::filesystem::path side(a.out);
  side.replace_extension(".json");
  emit(j, side.string(), out);
  out << "wrote " << a.out << " and " << side.string() << "\n";
  return kExitOk;
}

int cmd_reproduce(const Args& a, std::ostream& out) {
  const auto r = run_experiment(a.experiment, a.seed);
  out << format_report(r);
  if (!a.out.empty()) {
    Json j;
    j["schema"] = 1;
    j["experiment"] = r.id;
    j["seed"] = a.seed;
    Json rows = Json::array();
    for (const auto& row : r.rows) {
      rows.push_back({{"name", row.name}, {"value", row.value}, {"expected", row.expected}, {"pass", row.pass}});
    }
    j["rows"] = rows;
    j["pass"] = r.pass();
    j["timing"] = {{"wall_seconds", r.seconds}};
    emit(j, a.out, out);
  }
  return kExitOk;
}

void add_data_options(CLI::App* c, Args& a) {
  auto* in = c->add_option("--input", a.input, "CSV with header x0..,y0..");
  auto* model = c->add_option("--model", a.model, "synthetic model: gm1d, mvg, expgamma, gm_mv, gaussian");
  in->excludes(model);
  c->add_option("--mu-z", a.mu_z, "mixture offset")->capture_default_str();
  c->add_option("--eps", a.eps, "mixture noise sd")->capture_default_str();
  c->add_option("--rho", a.rho, "correlation of the gaussian model")->capture_default_str();
  c->add_option("--d", a.d, "dimension of mvg, expgamma, gm_mv")->capture_default_str()->check(CLI::Range(1, 10));
  c->add_option("--rotation-seed", a.rotation_seed, "expgamma rotation seed")->capture_default_str();
  c->add_option("--n", a.n, "sample size")->capture_default_str()->check(CLI::Range(Eigen::Index{10}, Eigen::Index{10000000}));
}

void add_method_options(CLI::App* c, Args& a) {
  c->add_option("--method", a.method, "ace, agce, offshelf, biterminal, kcca, naive")
      ->capture_default_str()
      ->check(CLI::IsMember({"ace", "agce", "offshelf", "biterminal", "kcca", "naive"}));
  c->add_option("--restarts", a.restarts, "AGCE restarts")->capture_default_str()->check(CLI::Range(1, 1000));
  c->add_option("--k", a.k, "canonical pairs (0: min(dx, dy))")->capture_default_str()->check(CLI::Range(0, 100));
  c->add_option("--smoother", a.smoother, "knn or kernel")->capture_default_str()->check(CLI::IsMember({"knn", "kernel"}));
  c->add_option("--smoother-k", a.smoother_k, "kNN neighbours (0: default)")->check(CLI::Range(0, 10000000));
  c->add_option("--bandwidth", a.bandwidth, "kernel bandwidth (0: Scott)")->check(CLI::Range(0.0, 1e9));
  c->add_option("--units", a.units, "bits or nats")->capture_default_str()->check(CLI::IsMember({"bits", "nats"}));
}

void add_seed(CLI::App* c, Args& a) {
  c->add_option("--seed", a.seed, "random seed")->envname("GB_SEED")->capture_default_str();
  c->add_option("--config", "key = value file with option names as keys; command-line flags win")->type_name("FILE");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// Expands --config FILE into --key value pairs for keys not already given.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> out;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParameterError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    const bool given = std::any_of(out.begin(), out.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (value == "true") {
      out.push_back(flag);
    } else if (value != "false") {
      out.push_back(flag);
      out.push_back(value);
    }
  }
  return out;
}

int code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const ConditioningError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const Error*>(&e)) return kExitInput;
  return kExitNumeric;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Gaussian lower bounds on mutual information and on the information bottleneck curve"};
  app.name("gaussbound");
  app.require_subcommand(1);

  auto* bound = app.add_subcommand("bound", "compute the Gaussian lower bound and the ACE upper bound");
  add_data_options(bound, a);
  add_method_options(bound, a);
  add_seed(bound, a);
  bound->add_option("--out", a.out, "report path (default: stdout)");

  auto* curve = app.add_subcommand("curve", "GIB curves of the fitted pair, the raw pair and a discrete reference");
  add_data_options(curve, a);
  add_method_options(curve, a);
  add_seed(curve, a);
  curve->add_option("--out-dir", a.out, "output directory")->required();
  curve->add_option("--grid-points", a.grid_points, "beta grid size")->capture_default_str()->check(CLI::Range(2, 100000));
  curve->add_flag("--no-reference", a.no_reference, "skip the discrete reference curve");
  curve->add_option("--quadrature-m", a.quadrature_m, "nodes per dimension")->capture_default_str()->check(CLI::Range(8, 64));
  curve->add_option("--anneal-points", a.anneal_points, "reverse-annealing steps")->capture_default_str()->check(CLI::Range(1, 10000));
  curve->add_option("--beta-max", a.beta_max, "first annealing beta")->capture_default_str();
  curve->add_option("--beta-min", a.beta_min, "last annealing beta")->capture_default_str();

  auto* gen = app.add_subcommand("gen", "sample a synthetic model to CSV");
  add_data_options(gen, a);
  add_seed(gen, a);
  gen->add_option("--out", a.out, "CSV path; a .json sidecar is written next to it")->required();

  auto* rep = app.add_subcommand("reproduce", "run a reference experiment and print its check table");
  std::string ids;
  for (const auto& id : experiment_ids()) ids += (ids.empty() ? "" : ", ") + id;
  rep->add_option("experiment", a.experiment, "one of: " + ids)->required();
  add_seed(rep, a);
  rep->add_option("--out", a.out, "also write the table as JSON");

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  try {
    std::reverse(args.begin(), args.end());
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e);
  }

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*bound) return cmd_bound(a, out);
    if (*curve) return cmd_curve(a, out);
    if (*gen) return cmd_gen(a, out);
    if (*rep) {
      const auto& v = experiment_ids();
      if (std::find(v.begin(), v.end(), a.experiment) == v.end()) {
        err << "unknown experiment '" << a.experiment << "'; valid ids: " << ids << "\n";
        return kExitInput;
      }
      return cmd_reproduce(a, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e);
  }
  return kExitInput;
}

}  // namespace gaussbound
