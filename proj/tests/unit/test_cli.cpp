#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaussbound/cli.hpp"

using namespace gaussbound;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gaussbound");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "gaussbound_cli_test";
  fs::create_directories(d);
  return d / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("gen writes the CSV contract") {
  const auto p = scratch("gm.csv");
  auto r = cli({"gen", "--model", "gm1d", "--n", "500", "--seed", "3", "--out", p.string()});
  REQUIRE(r.code == 0);
  const auto text = slurp(p);
  const auto ls = lines(text);
  CHECK(ls.size() == 501);
  CHECK(ls[0] == "x0,y0");
  CHECK(text.find('\r') == std::string::npos);
  const auto side = Json::parse(slurp(scratch("gm.json")));
  CHECK(side["schema"] == 1);
  CHECK(std::abs(side["true_mi"]["bits"].get<double>() - 1.6645) <= 1e-3);

  REQUIRE(cli({"gen", "--model", "gm1d", "--n", "500", "--seed", "3", "--out", scratch("gm2.csv").string()}).code == 0);
  CHECK(slurp(scratch("gm2.csv")) == text);

  const auto round = read_samples_csv(p.string());
  CHECK(round.n() == 500);
  write_samples_csv(scratch("gm3.csv").string(), round);
  CHECK(slurp(scratch("gm3.csv")) == text);

  const auto e = scratch("exp.csv");
  REQUIRE(cli({"gen", "--model", "expgamma", "--d", "3", "--n", "50", "--out", e.string()}).code == 0);
  CHECK(lines(slurp(e))[0] == "x0,x1,x2,y0,y1,y2");
  const auto es = Json::parse(slurp(scratch("exp.json")));
  CHECK(es["scramble"]["rotation_x"].size() == 3);
}

TEST_CASE("exit codes") {
  CHECK(cli({"gen", "--model", "gm1d", "--n", "50", "--out", "/nonexistent-dir/x/y.csv"}).code == kExitIo);
  CHECK(cli({"bound", "--input", scratch("missing.csv").string()}).code == kExitIo);

  const auto bad = scratch("bad.csv");
  std::ofstream(bad) << "x0,y0\n1,2\n3\n";
  auto r = cli({"bound", "--input", bad.string()});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find(":3:") != std::string::npos);

  std::ofstream(scratch("nan.csv")) << "x0,y0\n1,abc\n";
  CHECK(cli({"bound", "--input", scratch("nan.csv").string()}).code == kExitInput);
  std::ofstream(scratch("hdr.csv")) << "a,b\n1,2\n";
  CHECK(cli({"bound", "--input", scratch("hdr.csv").string()}).code == kExitInput);

  CHECK(cli({"bound", "--model", "gm1d", "--input", bad.string()}).code == kExitInput);
  CHECK(cli({"bound", "--model", "mvg", "--d", "2", "--n", "300", "--method", "agce"}).code == kExitInput);
  CHECK(cli({"bound", "--model", "gm1d", "--method", "cca"}).code == kExitInput);
  CHECK(cli({"frobnicate"}).code == kExitInput);
  r = cli({"reproduce", "sec9"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("sec4.4") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("bound on independent columns") {
  const auto p = scratch("ind.csv");
  {
    std::ofstream f(p);
    f << "x0,y0\n";
    Rng rng(1);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 3000; ++i) f << nd(rng) << "," << nd(rng) << "\n";
  }
  const auto r = cli({"bound", "--input", p.string(), "--restarts", "2"});
  REQUIRE(r.code == 0);
  const auto j = Json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["result"]["lower_bound"].get<double>() <= 0.02);
  CHECK(j["result"]["lossless_gaussian_impossible"] == false);
  CHECK(j["result"]["true_mi"].is_null());
}

TEST_CASE("bound reports, units and determinism") {
  const std::vector<std::string> base{"bound", "--model", "gm1d", "--n", "3000", "--method", "naive", "--seed", "4"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    const auto r = cli(a);
    REQUIRE(r.code == 0);
    return Json::parse(r.out);
  };
  const auto bits = with({});
  const auto nats = with({"--units", "nats"});
  CHECK(std::abs(nats["result"]["lower_bound"].get<double>() / std::log(2.0) -
                 bits["result"]["lower_bound"].get<double>()) <= 1e-9);
  CHECK(std::abs(nats["result"]["upper_bound"].get<double>() / std::log(2.0) -
                 bits["result"]["upper_bound"].get<double>()) <= 1e-9);
  CHECK(bits["result"]["lossless_gaussian_impossible"] == true);
  CHECK(bits["result"]["lower_bound"].get<double>() < 0.15);
  CHECK(with({})["result"].dump() == bits["result"].dump());

  const auto out = scratch("report.json");
  REQUIRE(cli({"bound", "--model", "gm1d", "--n", "3000", "--method", "naive", "--seed", "4", "--out", out.string()}).code == 0);
  CHECK(Json::parse(slurp(out))["result"].dump() == bits["result"].dump());
}

TEST_CASE("seed from the environment and from a config file") {
  const std::vector<std::string> a{"bound", "--model", "gm1d", "--n", "2000", "--method", "naive"};
  auto run = [](std::vector<std::string> args) {
    const auto r = cli(args);
    REQUIRE(r.code == 0);
    return Json::parse(r.out)["result"].dump();
  };
  auto seeded = a;
  seeded.insert(seeded.end(), {"--seed", "11"});
  const auto want = run(seeded);

  setenv("GB_SEED", "11", 1);
  CHECK(run(a) == want);
  unsetenv("GB_SEED");
  CHECK(run(a) != want);

  const auto cfg = scratch("run.toml");
  std::ofstream(cfg) << "seed = 11\nmethod = \"agce\"\n";
  auto with_cfg = a;
  with_cfg.insert(with_cfg.end(), {"--config", cfg.string()});
  // --method on the command line wins over the file.
  CHECK(run(with_cfg) == want);
}

TEST_CASE("curve writes three curves and a manifest") {
  const auto dir = scratch("curves");
  fs::remove_all(dir);
  const auto r = cli({"curve", "--model", "gm1d", "--n", "2000", "--restarts", "2", "--grid-points", "40",
                      "--quadrature-m", "8", "--anneal-points", "20", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto m = Json::parse(slurp(dir / "manifest.json"));
  CHECK(m["schema"] == 1);
  CHECK(m["config"]["method"] == "agce");
  for (const char* f : {"method.csv", "naive.csv", "reference.csv"}) {
    const auto ls = lines(slurp(dir / f));
    CHECK(ls[0] == "beta,i_tx,i_ty");
    CHECK(ls.size() > 10);
  }
  CHECK(m["summary"]["naive_below_method"].get<double>() <= 0.0);
  CHECK(m["summary"]["method_above_reference"].get<double>() <= 0.02);
}

TEST_CASE("curve on an independent model stays at the origin") {
  const auto dir = scratch("curves_ind");
  fs::remove_all(dir);
  const auto r = cli({"curve", "--model", "gaussian", "--rho", "0", "--n", "2000", "--method", "naive",
                      "--grid-points", "20", "--quadrature-m", "8", "--anneal-points", "10", "--units", "nats",
                      "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  auto ls = lines(slurp(dir / "reference.csv"));
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto last = ls[i].rfind(',');
    CHECK(std::stod(ls[i].substr(last + 1)) <= 1e-6);
  }
  ls = lines(slurp(dir / "method.csv"));
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto last = ls[i].rfind(',');
    CHECK(std::stod(ls[i].substr(last + 1)) <= 0.01);
  }
}
