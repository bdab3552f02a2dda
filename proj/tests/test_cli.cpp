#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "ruinlab/cli.hpp"
#include "ruinlab/csv.hpp"

namespace fs = std::filesystem;
using namespace ruinlab;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("ruinlab_test_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

std::string write_config(const Scratch& s, const std::string& name, const testcfg::Json& j) {
  const std::string p = s / name;
  spit(p, j.dump(2));
  return p;
}

}  // namespace

TEST_CASE("simulate writes the documented columns") {
  Scratch s("simulate");
  testcfg::Json j = testcfg::classical();
  j["seed"] = 7;
  const std::string cfg = write_config(s, "classical.json", j);
  const Result r = run({"simulate", "--config", cfg, "--u", "0.5,1,2", "--paths", "2000", "--horizon", "50"});
  REQUIRE(r.code == cli::kExitOk);
  const CsvTable t = parse_csv(r.out);
  CHECK(t.header == std::vector<std::string>{"u", "i", "horizon", "n_paths", "psi_hat", "std_err", "h"});
  REQUIRE(t.rows.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(t.integer(k, 3) == 2000);
    CHECK(t.number(k, 2) == 50.0);
    const double psi = t.number(k, 4);
    CHECK(psi >= 0.0);
    CHECK(psi <= 1.0);
    CHECK(std::abs(psi - 0.5 * std::exp(-0.5 * t.number(k, 0))) <= 4.0 * t.number(k, 5) + 1e-3);
  }

  const Result zero = run({"simulate", "--config", cfg, "--u", "0", "--paths", "10"});
  REQUIRE(zero.code == cli::kExitOk);
  CHECK(parse_csv(zero.out).number(0, 4) == 1.0);
}

TEST_CASE("simulate reruns are byte-identical and carry manifests") {
  Scratch s("rerun");
  const std::string cfg = write_config(s, "two.json", testcfg::two_regime());
  const std::vector<std::string> base{"simulate", "--config", cfg, "--u", "1,2", "--i", "1", "--paths", "500",
                                      "--horizons", "20,40", "--seed", "99"};
  std::vector<std::string> a = base, b = base;
  a.insert(a.end(), {"--out", s / "a.csv"});
  b.insert(b.end(), {"--out", s / "b.csv"});
  REQUIRE(run(a).code == cli::kExitOk);
  REQUIRE(run(b).code == cli::kExitOk);
  CHECK(slurp(s / "a.csv") == slurp(s / "b.csv"));
  CHECK(parse_csv(slurp(s / "a.csv")).rows.size() == 4);

  const nlohmann::json m = nlohmann::json::parse(slurp(s / "a.csv.manifest.json"));
  CHECK(m.at("seed") == 99);
  CHECK(m.at("command") == "simulate");
  CHECK(m.at("config_hash").get<std::string>().size() == 16);
  CHECK(m.contains("started_at"));
  CHECK(m.contains("wall_clock_seconds"));
}

TEST_CASE("configuration errors exit with status 1 and name the error") {
  Scratch s("errors");
  spit(s / "broken.json", "{\"K\": 1, ");
  const Result parse = run({"simulate", "--config", s / "broken.json", "--u", "1"});
  CHECK(parse.code == cli::kExitValidation);
  CHECK(parse.err.find("ParseError") != std::string::npos);

  testcfg::Json j = testcfg::two_regime();
  j["lambda"] = {{-2.0, 2.5}, {3.0, -3.0}};
  const Result rows = run({"simulate", "--config", write_config(s, "rows.json", j), "--u", "1"});
  CHECK(rows.code == cli::kExitValidation);
  CHECK(rows.err.find("RowSumViolation") != std::string::npos);

  testcfg::Json sig = testcfg::two_regime();
  sig["sigma"] = {0.4, -1.0};
  const Result sigma = run({"simulate", "--config", write_config(s, "sigma.json", sig), "--u", "1"});
  CHECK(sigma.code == cli::kExitValidation);
  CHECK(sigma.err.find("NonPositiveSigma") != std::string::npos);

  const Result regime = run({"simulate", "--config", write_config(s, "ok.json", testcfg::two_regime()), "--u", "1",
                             "--i", "5"});
  CHECK(regime.code == cli::kExitValidation);
}

TEST_CASE("usage errors exit with status 64") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"simulate", "--bogus"}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("compare reports PASS and FAIL") {
  Scratch s("compare");
  spit(s / "a.csv", "u,regime,value,std_err\n1,0,0.9,0.1\n2,0,0.5,0.1\n");
  spit(s / "b.csv", "u,regime,value\n1,0,0.5\n2,0,0.5\n");
  spit(s / "one.csv", "u,regime\n2,0\n");
  spit(s / "both.csv", "u,regime\n1,0\n2,0\n");

  const Result pass = run({"compare", "--a", s / "a.csv", "--b", s / "b.csv", "--points", s / "one.csv"});
  CHECK(pass.code == cli::kExitOk);
  CHECK(pass.out.find("PASS max_z=0") != std::string::npos);

  const Result fail = run({"compare", "--a", s / "a.csv", "--b", s / "b.csv", "--points", s / "both.csv", "--out",
                           s / "report.csv"});
  CHECK(fail.code == cli::kExitCompareFail);
  CHECK(fail.out.find("FAIL max_z=4") != std::string::npos);
  const CsvTable rep = read_csv(s / "report.csv");
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.number(0, rep.require("z")) == doctest::Approx(4.0));
  CHECK(fs::exists(s / "report.csv.manifest.json"));

  const Result loose = run({"compare", "--a", s / "a.csv", "--b", s / "b.csv", "--points", s / "both.csv",
                            "--threshold", "4.5"});
  CHECK(loose.code == cli::kExitOk);
}

TEST_CASE("solve, residual and compare work together") {
  Scratch s("solve");
  const std::string cfg = write_config(s, "two.json", testcfg::two_regime());
  spit(s / "anchors.csv",
       "regime,u_min,psi_min,dpsi_min,u_max,psi_max\n0,0.25,0.6,-0.3,12,0.01\n1,0.25,0.5,-0.25,12,0.01\n");
  const Result solve =
      run({"solve", "--config", cfg, "--anchors", s / "anchors.csv", "--points", "200", "--out", s / "grid.csv"});
  REQUIRE(solve.code == cli::kExitOk);
  const CsvTable grid = read_csv(s / "grid.csv");
  CHECK(grid.header == std::vector<std::string>{"u", "regime", "psi", "psi_p", "psi_pp"});
  CHECK(grid.rows.size() == 400);
  CHECK(fs::exists(s / "grid.csv.manifest.json"));

  const Result res = run({"residual", "--config", cfg, "--grid", s / "grid.csv", "--out", s / "res.csv"});
  REQUIRE(res.code == cli::kExitOk);
  const CsvTable rt = read_csv(s / "res.csv");
  CHECK(rt.header == std::vector<std::string>{"u", "regime", "residual"});
  CHECK(rt.rows.size() > 0);

  // The grid compared against itself.
  spit(s / "pts.csv", "u,regime\n1,0\n2,1\n4,0\n");
  const Result cmp =
      run({"compare", "--a", s / "grid.csv", "--b", s / "grid.csv", "--points", s / "pts.csv"});
  CHECK(cmp.code == cli::kExitOk);

  spit(s / "bad_anchors.csv", "regime,u_min,psi_min,dpsi_min,u_max,psi_max\n0,0.25,5,0,12,0\n1,0.25,0,0,12,0\n");
  const Result bad = run({"solve", "--config", cfg, "--anchors", s / "bad_anchors.csv"});
  CHECK(bad.code == cli::kExitNumerical);
}

TEST_CASE("residual of an exact classical grid is small") {
  Scratch s("residual");
  // Survival probability of a one-regime diffusive model is not available in
  // closed form, so use the classical model, whose grid can be written down.
  const std::string cfg = write_config(s, "classical.json", testcfg::classical());
  CsvBuilder b({"u", "regime", "psi", "psi_p", "psi_pp"});
  for (int k = 0; k <= 400; ++k) {
    const double u = 0.01 + 0.025 * k;
    const double e = std::exp(-0.5 * u);
    b.cell(u).cell(0).cell(0.5 * e).cell(-0.25 * e).cell(0.125 * e).end_row();
  }
  spit(s / "cl.csv", b.text());
  const Result r = run({"residual", "--config", cfg, "--grid", s / "cl.csv"});
  REQUIRE(r.code == cli::kExitOk);
  const CsvTable t = parse_csv(r.out);
  REQUIRE(t.rows.size() > 100);
  // The grid holds psi constant on (0, 0.01); that gap contributes about
  // 0.01 * 0.0025 exp(-u) / 2 through the jump integral.
  double worst = 0.0;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const double u = t.number(k, 0);
    CHECK(std::abs(t.number(k, 2)) < 2e-5 * std::exp(-0.5 * u) + 1e-9);
    worst = std::max(worst, std::abs(t.number(k, 2)));
  }
  CHECK(worst < 2e-5);
}

TEST_CASE("report writes every artifact") {
  Scratch s("report");
  const std::string cfg = write_config(s, "two.json", testcfg::two_regime());
  const Result r = run({"report", "--config", cfg, "--out-dir", s / "out", "--paths", "3000", "--check-u", "1,2",
                        "--horizons", "30,60", "--smooth-points", "8", "--step", "0.0625", "--seed", "5"});
  CHECK((r.code == cli::kExitOk || r.code == cli::kExitCompareFail));
  for (const char* f : {"anchors.csv", "solution.csv", "comparison.csv", "smoothness.csv", "summary.txt"}) {
    CHECK(fs::exists(s.dir / "out" / f));
    CHECK(fs::exists(s.dir / "out" / (std::string(f) + ".manifest.json")));
  }
  CHECK(r.out.find("max_z=") != std::string::npos);
}
