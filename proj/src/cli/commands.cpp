#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <variant>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/version.hpp>
#include "json.hpp"

#include "hheat/cli.hpp"
#include "hheat/driver.hpp"
#include "hheat/errors.hpp"
#include "hheat/heatmc.hpp"
#include "hheat/parallel.hpp"

namespace hheat::cli {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = std::numbers::pi;

std::string show(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

using Field = std::variant<double, std::int64_t, std::string>;

/// Writes the header on open and flushes every row, so a failed run leaves
/// the rows produced so far.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    out_ << header << '\n' << std::flush;
  }

  void row(const std::vector<Field>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      std::visit(
          [this](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out_ << format_number(v);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
              out_ << std::to_string(v);
            } else {
              out_ << v;
            }
          },
          fields[i]);
    }
    out_ << '\n' << std::flush;
  }

 private:
  std::ofstream out_;
};

struct Context {
  const RunConfig& cfg;
  std::ostream& out;
  nlohmann::json& manifest;

  std::filesystem::path file(const std::string& name) {
    manifest["outputs"].push_back(name);
    return cfg.output_dir / name;
  }
};

ShellOptions shell_options(const RunConfig& cfg) {
  ShellOptions opt;
  opt.shell_eps = cfg.shell_eps.value_or(0.0);
  opt.surface_nodes = cfg.surface_nodes;
  opt.quadrature_level = cfg.quadrature_level;
  return opt;
}

SurvivalConfig survival_config(const RunConfig& cfg) {
  SurvivalConfig sc;
  sc.n_paths = cfg.n_paths;
  sc.n_steps = cfg.n_steps;
  sc.n_substeps = cfg.n_substeps;
  sc.seed = cfg.seed;
  return sc;
}

int cmd_geom(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const DomainPtr dom = make_domain(cfg.domain);
  const SurfaceQuadrature quad = build_quadrature(*dom, cfg.quadrature_level);
  const double tol = resolved_char_tol(*dom, cfg.quadrature_level);
  const CharacteristicScan scan = characteristic_scan(*dom, quad, tol);
  CsvWriter csv(ctx.file("geom.csv"), "quantity,value,est_error");
  csv.row({"characteristic_nodes", static_cast<std::int64_t>(scan.flagged.size()), 0.0});
  csv.row({"min_nh_norm", scan.min_nh_norm, 0.0});
  csv.row({"char_tol", tol, 0.0});
  if (!scan.flagged.empty()) {
    CsvWriter flagged(ctx.file("geom_flagged.csv"), "x1,x2,x3,nh_norm");
    ctx.out << dom->name() << ": " << scan.flagged.size() << " characteristic quadrature nodes\n";
    for (std::size_t i : scan.flagged) {
      const SurfacePoint& sp = quad.nodes[i].sp;
      flagged.row({sp.p.x1, sp.p.x2, sp.p.x3, sp.nh_norm});
      ctx.out << "  (" << show(sp.p.x1) << ", " << show(sp.p.x2) << ", "
              << show(sp.p.x3) << ") nh_norm " << show(sp.nh_norm) << '\n';
    }
    throw CharacteristicDomain(std::to_string(scan.flagged.size()) + " characteristic quadrature nodes");
  }
  const BoundaryIntegrals bi = boundary_integrals(*dom, cfg.quadrature_level);
  const Extrapolated vol = volume_extrapolated(*dom, 7);
  const Vec3 ext = dom->bbox().extent();
  const double reach = reach_probe(*dom, quad, 0.5 * std::min(ext[0], ext[1]));
  const double k = std::sqrt(2.0 / kPi);
  csv.row({"volume", vol.value, vol.est_error});
  csv.row({"sigma", bi.sigma.value, bi.sigma.est_error});
  csv.row({"sigma0", bi.sigma0.value, bi.sigma0.est_error});
  csv.row({"mean_curvature_integral", bi.mean_curvature.value, bi.mean_curvature.est_error});
  csv.row({"reach", reach, 0.0});
  csv.row({"c0", vol.value, vol.est_error});
  csv.row({"c1", k * bi.sigma0.value, k * bi.sigma0.est_error});
  csv.row({"c2", 0.25 * bi.mean_curvature.value, 0.25 * bi.mean_curvature.est_error});
  ctx.out << dom->name() << ": noncharacteristic (min nh_norm " << show(scan.min_nh_norm) << ")\n"
          << "  volume " << show(vol.value) << "  sigma0 " << show(bi.sigma0.value)
          << "  int H " << show(bi.mean_curvature.value) << "  reach " << show(reach) << '\n'
          << "  Q(t) ~ " << show(vol.value) << " - " << show(k * bi.sigma0.value) << " sqrt(t) + "
          << show(0.25 * bi.mean_curvature.value) << " t\n";
  return 0;
}

int cmd_heat(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto start = std::chrono::steady_clock::now();
  CsvWriter csv(ctx.file("heat.csv"), "t,q_hat,std_err,shell_eps,n_paths,censored_fraction,wall_time_s");
  const DomainPtr dom = make_domain(cfg.domain);
  const ShellLayout shell = build_shell(*dom, cfg.t_grid, shell_options(cfg));
  const auto est = estimate_heat_content(*dom, shell, cfg.t_grid, survival_config(cfg));
  const double wall =
      cfg.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() : 0.0;
  for (const auto& e : est) {
    csv.row({e.t, e.Q_hat, e.std_err, e.shell_eps, static_cast<std::int64_t>(e.n_paths_per_node),
             e.censored_fraction, wall});
  }
  ctx.manifest["shell"] = {{"eps", shell.eps},
                           {"reach", shell.reach},
                           {"nodes", shell.nodes.size()},
                           {"volume", shell.volume},
                           {"volume_err", shell.volume_err},
                           {"shell_volume", shell.shell_volume}};
  ctx.out << dom->name() << ": " << shell.nodes.size() << " shell nodes, eps " << show(shell.eps) << '\n';
  for (const auto& e : est) {
    ctx.out << "  t " << show(e.t) << "  Q " << show(e.Q_hat) << " +- " << show(e.std_err)
            << '\n';
  }
  return 0;
}

int cmd_fit(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::filesystem::path heat = cfg.heat_csv.empty() ? cfg.output_dir / "heat.csv" : std::filesystem::path(cfg.heat_csv);
  const std::vector<HeatRow> rows = read_heat_csv(heat);
  if (rows.size() < 4) throw SchemaError(heat.string() + ": fit needs at least 4 rows");
  std::vector<FitPoint> pts;
  for (const auto& r : rows) pts.push_back({r.t, r.q_hat, r.std_err});
  const ExpansionFit fit = fit_expansion(pts);
  const DomainPtr dom = make_domain(cfg.domain);
  const PredictedCoefficients pred = predicted_coefficients(*dom, cfg.quadrature_level);
  CsvWriter csv(ctx.file("fit.csv"), "coef,estimate,std_err,predicted,z");
  const double est[3] = {fit.c0, fit.c1, fit.c2};
  const double want[3] = {pred.c0, pred.c1, pred.c2};
  const double want_err[3] = {pred.c0_err, pred.c1_err, pred.c2_err};
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double se = std::sqrt(std::max(0.0, fit.covariance(i, i)));
    const double scale = std::hypot(se, want_err[i]);
    const double diff = est[i] - want[i];
    const double z = scale > 0.0 ? diff / scale : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    worst = std::max(worst, std::abs(z));
    csv.row({"c" + std::to_string(i), est[i], se, want[i], z});
    ctx.out << "  c" << i << " " << show(est[i]) << " +- " << show(se) << "  predicted "
            << show(want[i]) << "  z " << show(z) << '\n';
  }
  ctx.manifest["fit"] = {{"condition", fit.condition}, {"residual_norm", fit.residual_norm}, {"max_abs_z", worst}};
  if (worst > 4.0) throw ValidationError("fit z-score " + show(worst) + " exceeds 4");
  return 0;
}

int cmd_diag(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  CsvWriter csv(ctx.file("diag.csv"), "t,i1,i2,i3,res_tau_T,res_T_tau,se_i1,se_i2,se_i3,se_r1,se_r2");
  const DomainPtr dom = make_domain(cfg.domain);
  const ShellLayout shell = build_shell(*dom, cfg.t_grid, shell_options(cfg));
  const auto dec = decompose_events(*dom, shell, cfg.t_grid, survival_config(cfg), cfg.delta);
  std::vector<double> ts, r1, r2;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& d : dec) {
    csv.row({d.t, d.I1, d.I2, d.I3, d.residual_tauT, d.residual_TtauIn, d.se_I1, d.se_I2, d.se_I3, d.se_r1, d.se_r2});
    ts.push_back(d.t);
    r1.push_back(d.residual_tauT);
    r2.push_back(d.residual_TtauIn);
    const double gap = d.I1 - d.I2 + d.I3 - d.E_direct;
    checks.push_back({{"t", d.t}, {"identity_gap", gap}, {"se_E", d.se_E}, {"censored_fraction", d.censored_fraction}});
    ctx.out << "  t " << show(d.t) << "  I1-I2+I3-E " << show(gap) << "  censored "
            << show(d.censored_fraction) << '\n';
  }
  const double s1 = loglog_slope(ts, r1), s2 = loglog_slope(ts, r2);
  csv.row({"slope", "", "", "", s1, s2, "", "", "", "", ""});
  ctx.manifest["diag"] = {{"checks", checks}, {"slope_res_tau_T", s1}, {"slope_res_T_tau", s2}};
  ctx.out << "  residual slopes " << show(s1) << ", " << show(s2) << '\n';
  return 0;
}

struct Check {
  std::string suite, name;
  double value = 0.0, tolerance = 0.0;
};

struct Sample {
  double mean = 0.0, se = 0.0;
};

Sample sample_mean(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = pairwise_sum(v) / n;
  std::vector<double> d(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) d[i] = (v[i] - m) * (v[i] - m);
  return {m, std::sqrt(pairwise_sum(d) / (n - 1) / n)};
}

GeodesicChart random_chart(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return make_chart(HPoint{u(rng), u(rng), u(rng)}, kPi * u(rng), 2.0 * u(rng), 0.5 * (u(rng) + 1.0));
}

ChartCoords random_coords(std::mt19937_64& rng, const ChartBox& b, double frac) {
  std::uniform_real_distribution<double> u(-frac, frac);
  return {b.xi_max * u(rng), b.y_max * u(rng), b.z_max * u(rng)};
}

std::vector<std::pair<std::string, std::function<std::vector<Check>(std::uint64_t)>>> validation_suites() {
  return {
      {"hgroup",
       [](std::uint64_t seed) {
         std::mt19937_64 rng(seed);
         std::uniform_real_distribution<double> u(-2.0, 2.0);
         double assoc = 0, inv = 0, dil = 0, dist = 0;
         for (int i = 0; i < 100; ++i) {
           const HPoint p{u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng)}, r{u(rng), u(rng), u(rng)};
           assoc = std::max(assoc, (group_mul(group_mul(p, q), r).vec() - group_mul(p, group_mul(q, r)).vec()).norm());
           inv = std::max(inv, group_mul(p, group_inv(p)).vec().norm());
           const double s = 0.5 * (u(rng) + 3.0);
           dil = std::max(dil, (dilate(group_mul(p, q), s).vec() - group_mul(dilate(p, s), dilate(q, s)).vec()).norm());
           if (i < 20) {
             dist = std::max(dist, std::abs(cc_distance(group_mul(r, p), group_mul(r, q)) - cc_distance(p, q)));
           }
         }
         return std::vector<Check>{{"hgroup", "associativity", assoc, 1e-12},
                                   {"hgroup", "inverse", inv, 1e-12},
                                   {"hgroup", "dilation_homomorphism", dil, 1e-12},
                                   {"hgroup", "distance_left_invariance", dist, 1e-8}};
       }},
      {"chart",
       [](std::uint64_t seed) {
         std::mt19937_64 rng(seed + 1);
         double round = 0, origin = 0;
         for (int i = 0; i < 100; ++i) {
           const GeodesicChart c = random_chart(rng);
           const ChartCoords x = random_coords(rng, c.box, 0.95);
           const ChartCoords back = phi_inverse(c, phi(c, x));
           round = std::max({round, std::abs(back.xi - x.xi), std::abs(back.y - x.y), std::abs(back.z - x.z)});
           origin = std::max(origin, (phi(c, {}).vec() - c.base.vec()).norm());
         }
         return std::vector<Check>{{"chart", "round_trip", round, 1e-9}, {"chart", "origin_is_base", origin, 1e-14}};
       }},
      {"jacobian",
       [](std::uint64_t seed) {
         std::mt19937_64 rng(seed + 2);
         double worst = 0;
         const double h = 1e-5;
         for (int i = 0; i < 100; ++i) {
           const GeodesicChart c = random_chart(rng);
           const ChartCoords x = random_coords(rng, c.box, 0.9);
           Mat3 j;
           for (int k = 0; k < 3; ++k) {
             ChartCoords a = x, b = x;
             (&a.xi)[k] += h;
             (&b.xi)[k] -= h;
             j.col(k) = (phi_unchecked(c, a).vec() - phi_unchecked(c, b).vec()) / (2 * h);
           }
           worst = std::max(worst, std::abs(j.determinant() / phi_jacobian_det(c.lambda, x.y) - 1.0));
         }
         return std::vector<Check>{{"jacobian", "chart_determinant_fd", worst, 1e-6}};
       }},
      {"tube",
       [](std::uint64_t) {
         CylinderDomain cyl(1.0, 1.0);
         double worst = 0;
         for (int i = 0; i < 50; ++i) {
           const double a = 2 * kPi * i / 50.0;
           const SurfacePoint s = g1_normal(cyl, HPoint{std::cos(a), std::sin(a), 0.02 * i});
           for (double r : {0.05, 0.2, 0.5}) worst = std::max(worst, std::abs(tube_jacobian(cyl, s, r) - (1.0 - r)));
         }
         return std::vector<Check>{{"tube", "cylinder_jacobian_exact", worst, 1e-6}};
       }},
      {"density",
       [](std::uint64_t) {
         using boost::math::quadrature::exp_sinh;
         using boost::math::quadrature::gauss_kronrod;
         double worst = 0;
         for (double t : {0.25, 1.0}) {
           auto in_a = [t](double a) {
             const double tau = t * std::sin(a) * std::sin(a);
             if (tau <= 0.0 || tau >= t) return 0.0;
             exp_sinh<double> es;
             return es.integrate([&](double xi) { return joint_density_phi(xi, tau, t); }) * 2.0 * t * std::sin(a) *
                    std::cos(a);
           };
           worst = std::max(worst, std::abs(gauss_kronrod<double, 61>::integrate(in_a, 0.0, kPi / 2, 10, 1e-12) - 1.0));
         }
         return std::vector<Check>{{"density", "max_argmax_normalization", worst, 1e-6}};
       }},
      {"moments",
       [](std::uint64_t seed) {
         // Stochastic checks report |z| against a 3 sigma gate.
         const int n = 20000;
         const double t = 0.5;
         const Philox4x32 rng(seed);
         std::vector<double> xi2(n), tau(n), bn2(n), a2(n), bt2(n), at(n);
         parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
           const MaxArgmax m = sample_max_argmax(rng, 0, i, t);
           xi2[i] = m.xi * m.xi;
           tau[i] = m.tau;
           const DriverPath p = sample_driver({t, 256, 2, seed + 1, i});
           bn2[i] = p.BN.back() * p.BN.back();
           a2[i] = p.A.back() * p.A.back();
           const MaxStats ms = max_stats(p);
           bt2[i] = ms.BT_at_tau * ms.BT_at_tau;
           at[i] = ms.A_at_tau;
         });
         auto z = [](const std::vector<double>& v, double want) {
           const Sample s = sample_mean(v);
           return std::abs(s.mean - want) / s.se;
         };
         return std::vector<Check>{{"moments", "exact_max_second_moment_z", z(xi2, t), 3.0},
                                   {"moments", "exact_argmax_mean_z", z(tau, t / 2), 3.0},
                                   {"moments", "driver_variance_z", z(bn2, t), 3.0},
                                   {"moments", "area_variance_z", z(a2, t * t), 3.0},
                                   {"moments", "tangential_at_argmax_z", z(bt2, t / 2), 3.0},
                                   {"moments", "area_at_argmax_z", z(at, 0.0), 3.0}};
       }},
  };
}

int cmd_validate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  std::vector<Check> checks;
  bool matched = false;
  for (const auto& [name, suite] : validation_suites()) {
    if (!cfg.filter.empty() && cfg.filter != name) continue;
    matched = true;
    for (auto& c : suite(cfg.seed)) checks.push_back(std::move(c));
  }
  if (!matched) throw ConfigError("no validation suite named '" + cfg.filter + "'");
  CsvWriter csv(ctx.file("validate.csv"), "suite,check,value,tolerance,status");
  int failed = 0;
  for (const auto& c : checks) {
    const bool ok = c.value <= c.tolerance;
    failed += ok ? 0 : 1;
    csv.row({c.suite, c.name, c.value, c.tolerance, ok ? "pass" : "FAIL"});
    ctx.out << (ok ? "pass  " : "FAIL  ") << c.suite << '/' << c.name << "  " << show(c.value)
            << " <= " << show(c.tolerance) << '\n';
  }
  ctx.manifest["validate"] = {{"checks", checks.size()}, {"failed", failed}};
  if (failed) throw ValidationError(std::to_string(failed) + " validation checks failed");
  return 0;
}

nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["domain"] = cfg.domain;
  j["t_grid"] = cfg.t_grid;
  j["n_paths"] = cfg.n_paths;
  j["n_steps"] = cfg.n_steps;
  j["n_substeps"] = cfg.n_substeps;
  j["shell_eps"] = cfg.shell_eps ? nlohmann::json(*cfg.shell_eps) : nlohmann::json("auto");
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  j["quadrature_level"] = cfg.quadrature_level;
  j["surface_nodes"] = cfg.surface_nodes;
  j["delta"] = cfg.delta;
  if (!cfg.heat_csv.empty()) j["heat_csv"] = cfg.heat_csv;
  if (!cfg.filter.empty()) j["filter"] = cfg.filter;
  return j;
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Validation: return 2;
    case ErrorCategory::Numerical: return 3;
    case ErrorCategory::Config: return 4;
  }
  return 3;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, int (*)(Context&)> commands{
      {"geom", cmd_geom}, {"heat", cmd_heat}, {"fit", cmd_fit}, {"diag", cmd_diag}, {"validate", cmd_validate}};
  const auto start = std::chrono::steady_clock::now();
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["config"] = config_json(cfg);
  manifest["seed"] = cfg.seed;
  manifest["versions"] = {{"hheat", kVersion},
                          {"compiler", __VERSION__},
                          {"cxx_standard", __cplusplus},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"boost", BOOST_LIB_VERSION}};
  manifest["workers"] = worker_count();
  manifest["outputs"] = nlohmann::json::array();
  int code = 0;
  const auto it = commands.find(command);
  try {
    if (it == commands.end()) throw ConfigError("unknown command '" + command + "'");
    check_config(cfg, command);
    std::filesystem::create_directories(cfg.output_dir);
    Context ctx{cfg, out, manifest};
    code = it->second(ctx);
  } catch (const Error& e) {
    err << "hheat " << command << ": " << e.what() << '\n';
    manifest["error"] = e.what();
    code = exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "hheat " << command << ": " << e.what() << '\n';
    manifest["error"] = e.what();
    code = 4;
  }
  manifest["exit_code"] = code;
  manifest["wall_time_s"] =
      cfg.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() : 0.0;
  std::error_code ec;
  if (std::filesystem::is_directory(cfg.output_dir, ec)) {
    std::ofstream(cfg.output_dir / ("manifest_" + command + ".json")) << manifest.dump(2) << '\n';
  }
  return code;
}

}  // namespace hheat::cli
