#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "hheat/cli.hpp"
#include "hheat/errors.hpp"
#include "hheat/parallel.hpp"
#include "support/oracles.hpp"

using namespace hheat;
using namespace hheat::cli;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hheat_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::vector<std::string>> read_rows(const fs::path& p) {
  std::map<std::string, std::vector<std::string>> out;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    out[f[0]] = f;
  }
  return out;
}

RunConfig cylinder_config(const fs::path& dir) {
  RunConfig c;
  c.domain = {{"name", "cylinder"}, {"R", "1"}, {"z_period", "1"}};
  c.output_dir = dir;
  c.seed = 5;
  return c;
}

int run(const std::string& cmd, const RunConfig& c) {
  std::ostringstream out, err;
  return run_command(cmd, c, out, err);
}

}  // namespace

TEST_CASE("expression parsing and precedence") {
  CHECK(Expression("1 + 2 * 3")(0, 0, 0) == 7.0);
  CHECK(Expression("(1 + 2) * 3")(0, 0, 0) == 9.0);
  CHECK(Expression("2 ^ 3 ^ 2")(0, 0, 0) == 512.0);
  CHECK(Expression("-x1^2")(3, 0, 0) == -9.0);
  CHECK(Expression("x1 - x2 - x3")(1, 2, 3) == -4.0);
  CHECK(Expression("8 / 4 / 2")(0, 0, 0) == 1.0);
  CHECK(Expression("2 × x2 ÷ 4 − 1")(0, 6, 0) == 2.0);
  CHECK(Expression("sqrt(x1) + exp(0) + sin(0) + cos(x3)")(4, 0, 0) == 4.0);
  CHECK(Expression("1.5e1 + .5")(0, 0, 0) == 15.5);
  CHECK_THROWS_AS(Expression("x4"), ConfigError);
  CHECK_THROWS_AS(Expression("tan(x1)"), ConfigError);
  CHECK_THROWS_AS(Expression("(x1 + 1"), ConfigError);
  CHECK_THROWS_AS(Expression("x1 +"), ConfigError);
  CHECK_THROWS_AS(Expression("x1 x2"), ConfigError);
  CHECK_THROWS_AS(Expression("x1 % 2"), ConfigError);
}

TEST_CASE("custom domain matches the catalog cylinder") {
  const std::map<std::string, std::string> spec{{"name", "custom"},
                                                {"F", "x1^2 + x2^2 - 1"},
                                                {"grad", "2*x1; 2*x2; 0"},
                                                {"hess", "2; 0; 0; 2; 0; 0"},
                                                {"bbox", "-1.25,-1.25,0,1.25,1.25,1"},
                                                {"period", "0,0,1"}};
  const DomainPtr custom = make_domain(spec);
  const CylinderDomain cyl(1.0, 1.0);
  const HPoint p{0.3, -0.7, 0.2};
  CHECK(custom->value(p) == doctest::Approx(cyl.value(p)));
  CHECK((custom->gradient(p) - cyl.gradient(p)).norm() <= 1e-14);
  CHECK((custom->hessian(p) - cyl.hessian(p)).norm() <= 1e-14);
  CHECK(custom->periods()[2] == 1.0);

  auto bad = spec;
  bad["grad"] = "2*x1; 2.001*x2; 0";
  try {
    make_domain(bad);
    FAIL("inconsistent gradient accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("gradient disagrees with finite differences at (") != std::string::npos);
  }
  bad = spec;
  bad["hess"] = "2; 0; 0; 2.1; 0; 0";
  CHECK_THROWS_AS(make_domain(bad), ValidationError);
  bad = spec;
  bad["hess"] = "2; 0; 0";
  CHECK_THROWS_AS(make_domain(bad), ConfigError);
  bad = spec;
  bad["colour"] = "red";
  CHECK_THROWS_AS(make_domain(bad), ConfigError);
  CHECK_THROWS_AS(make_domain({{"name", "torus"}}), ConfigError);
  CHECK_THROWS_AS(make_domain({{"name", "cylinder"}, {"R", "-1"}}), ConfigError);
}

TEST_CASE("config file parsing") {
  const fs::path dir = scratch("config");
  const fs::path ini = dir / "run.ini";
  std::ofstream(ini) << "[domain]\nname = cylinder\nR = 2\n\n[run]\nt_grid = 0.01, 0.02\nn_paths = 2000\n"
                        "shell_eps = 0.3\nseed = 42\noutput_dir = out\n";
  const RunConfig c = load_config(ini);
  CHECK(c.domain.at("R") == "2");
  CHECK(c.t_grid == std::vector<double>{0.01, 0.02});
  CHECK(c.n_paths == 2000);
  CHECK(c.shell_eps.value() == 0.3);
  CHECK(c.seed == 42);
  CHECK(c.output_dir == fs::path("out"));
  CHECK(c.n_steps == 64);

  std::ofstream(ini) << "[domain]\nname = cylinder\n[run]\nn_paths = lots\n";
  CHECK_THROWS_AS(load_config(ini), ConfigError);
  std::ofstream(ini) << "[domain]\nname = cylinder\n[extra]\nx = 1\n";
  CHECK_THROWS_AS(load_config(ini), ConfigError);
  std::ofstream(ini) << "[run]\nseed = 1\n";
  CHECK_THROWS_AS(load_config(ini), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.ini"), ConfigError);

  RunConfig bad = cylinder_config(dir);
  bad.t_grid = {0.02, 0.01};
  CHECK_THROWS_AS(check_config(bad, "heat"), ConfigError);
  bad.t_grid = {0.0, 0.01};
  CHECK_THROWS_AS(check_config(bad, "heat"), ConfigError);
  bad = cylinder_config(dir);
  bad.n_paths = 999;
  CHECK_THROWS_AS(check_config(bad, "heat"), ConfigError);
  CHECK_NOTHROW(check_config(bad, "geom"));
  CHECK(run("heat", bad) == 4);
  CHECK(run("bogus", cylinder_config(dir)) == 4);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(1000) == "1000");
  CHECK(format_number(-2.5e-7) == "-2.4999999999999999e-07");
  for (double v : {kPi, 1.0 / 3.0, 6.02214076e23, -1e-300}) CHECK(std::stod(format_number(v)) == v);
}

TEST_CASE("geom reports the cylinder expansion") {
  const fs::path dir = scratch("geom");
  CHECK(run("geom", cylinder_config(dir)) == 0);
  const auto rows = read_rows(dir / "geom.csv");
  CHECK(slurp(dir / "geom.csv").rfind("quantity,value,est_error\n", 0) == 0);
  const double want[3] = {kPi, 2 * std::sqrt(2 * kPi), kPi / 2};
  for (int i = 0; i < 3; ++i) {
    const auto& r = rows.at("c" + std::to_string(i));
    CHECK(std::abs(std::stod(r[1]) - want[i]) <= 1e-4 * want[i]);
  }
  CHECK(std::stod(rows.at("characteristic_nodes")[1]) == 0.0);
  CHECK(std::stod(rows.at("reach")[1]) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(fs::exists(dir / "manifest_geom.json"));

  RunConfig k = cylinder_config(dir);
  k.domain = {{"name", "koranyi_ball"}, {"r", "1"}};
  CHECK(run("geom", k) == 2);
  const std::string flagged = slurp(dir / "geom_flagged.csv");
  CHECK(flagged.rfind("x1,x2,x3,nh_norm\n", 0) == 0);
  // Every flagged node sits near a pole x3 = +-1/2.
  const auto frows = read_rows(dir / "geom_flagged.csv");
  CHECK(!frows.empty());
  std::ifstream in(dir / "geom_flagged.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    double x1, x2, x3, nh;
    char c;
    std::stringstream(line) >> x1 >> c >> x2 >> c >> x3 >> c >> nh;
    CHECK(std::hypot(x1, x2) <= 0.2);
    CHECK(std::abs(std::abs(x3) - 0.5) <= 0.05);
  }
}

TEST_CASE("fit against synthetic heat content") {
  const fs::path dir = scratch("fit");
  {
    std::ofstream out(dir / "heat.csv");
    out << "t,q_hat,std_err,shell_eps,n_paths,censored_fraction,wall_time_s\n";
    for (double t : {0.0025, 0.005, 0.01, 0.02, 0.04}) {
      out << format_number(t) << ',' << format_number(kPi - 2 * std::sqrt(2 * kPi * t) + kPi / 2 * t)
          << ",0.001,0.5,1000,0,0\n";
    }
  }
  RunConfig c = cylinder_config(dir);
  CHECK(run("fit", c) == 0);
  const auto rows = read_rows(dir / "fit.csv");
  for (const char* k : {"c0", "c1", "c2"}) CHECK(std::abs(std::stod(rows.at(k)[4])) <= 0.01);

  // Shifted c1 trips the alarm.
  {
    std::ofstream out(dir / "off.csv");
    out << "t,std_err,q_hat\n";
    for (double t : {0.0025, 0.005, 0.01, 0.02, 0.04}) {
      out << format_number(t) << ",1e-5," << format_number(kPi - 2.4 * std::sqrt(2 * kPi * t) + kPi / 2 * t) << '\n';
    }
  }
  c.heat_csv = (dir / "off.csv").string();
  CHECK(run("fit", c) == 2);

  {
    std::ofstream out(dir / "nose.csv");
    out << "t,q_hat\n0.01,1\n0.02,1\n0.03,1\n0.04,1\n";
  }
  c.heat_csv = (dir / "nose.csv").string();
  std::ostringstream o, e;
  CHECK(run_command("fit", c, o, e) == 4);
  CHECK(e.str().find("missing column 'std_err'") != std::string::npos);
  CHECK_THROWS_AS(read_heat_csv(dir / "nose.csv"), SchemaError);

  {
    std::ofstream out(dir / "short.csv");
    out << "t,q_hat,std_err\n0.01,1,0.1\n0.02,1,0.1\n";
  }
  c.heat_csv = (dir / "short.csv").string();
  CHECK(run("fit", c) == 4);
  {
    std::ofstream out(dir / "flat.csv");
    out << "t,q_hat,std_err\n0.01,1,0.1\n0.01,1.1,0.1\n0.01,0.9,0.1\n0.01,1,0.1\n";
  }
  c.heat_csv = (dir / "flat.csv").string();
  CHECK(run("fit", c) == 3);
}

TEST_CASE("validate suites and filter") {
  const fs::path dir = scratch("validate");
  RunConfig c;
  c.output_dir = dir;
  c.seed = 1;
  CHECK(run("validate", c) == 0);
  c.filter = "jacobian";
  CHECK(run("validate", c) == 0);
  const auto rows = read_rows(dir / "validate.csv");
  CHECK(rows.size() == 1);
  CHECK(rows.count("jacobian") == 1);
  c.filter = "nothing";
  CHECK(run("validate", c) == 4);

  // Stochastic checks at 3 se: at least 4 of 5 seeds pass.
  int passed = 0;
  c.filter = "moments";
  for (std::uint64_t s = 10; s < 15; ++s) {
    c.seed = s;
    passed += run("validate", c) == 0 ? 1 : 0;
  }
  CHECK(passed >= 4);
}

TEST_CASE("heat smoke run is fast, monotone and reproducible across workers") {
  const fs::path a = scratch("heat_a"), b = scratch("heat_b");
  RunConfig c = cylinder_config(a);
  c.n_paths = 1000;
  c.t_grid = {0.005, 0.01, 0.02};
  c.surface_nodes = 4;
  c.timing = false;
  const auto start = std::chrono::steady_clock::now();
  set_worker_count(1);
  CHECK(run("heat", c) == 0);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 60.0);
  set_worker_count(8);
  c.output_dir = b;
  CHECK(run("heat", c) == 0);
  set_worker_count(0);
  const std::string csv = slurp(a / "heat.csv");
  CHECK(csv == slurp(b / "heat.csv"));
  CHECK(csv.rfind("t,q_hat,std_err,shell_eps,n_paths,censored_fraction,wall_time_s\n", 0) == 0);

  std::vector<HeatRow> rows = read_heat_csv(a / "heat.csv");
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].q_hat <= rows[i - 1].q_hat + 3 * std::hypot(rows[i].std_err, rows[i - 1].std_err));
  }
  for (const auto& r : rows) {
    CHECK(std::abs(r.q_hat - oracle::disk_heat_content(r.t, 1.0)) <= 4 * r.std_err + 1e-3);
  }
}
