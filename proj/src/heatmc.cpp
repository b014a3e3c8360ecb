#include "hheat/heatmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "hheat/errors.hpp"
#include "hheat/parallel.hpp"

namespace hheat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double horizontal_grad_norm(const ImplicitDomain& dom, const HPoint& p) {
  const Vec3 g = frame_gradient(dom, p);
  return std::hypot(g[0], g[1]);
}

double binomial_se(double p, double n) { return n > 0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / n) : 0.0; }

std::size_t grid_index(double t, double dt) {
  const double k = std::round(t / dt);
  if (std::abs(k * dt - t) > 1e-9 * t) throw ParameterOutOfRange("t values must be multiples of the grid step");
  return static_cast<std::size_t>(k);
}

double max_of(const std::vector<double>& ts) {
  if (ts.empty()) throw ParameterOutOfRange("empty t grid");
  for (double t : ts) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterOutOfRange("t values must be positive");
  }
  return *std::max_element(ts.begin(), ts.end());
}

}  // namespace

std::vector<double> exit_times(const ImplicitDomain& dom, const HPoint& x, double t_final,
                               const SurvivalConfig& cfg) {
  if (cfg.n_paths < 1) throw ParameterOutOfRange("n_paths must be positive");
  const double f_start = dom.value(x);
  if (!(f_start < 0.0)) throw ParameterOutOfRange("start point is not inside the domain");
  const double g_start = horizontal_grad_norm(dom, x);
  const PathConfig base{t_final, cfg.n_steps, cfg.n_substeps, cfg.seed, 0};
  base.validate();
  const double h = base.substep();
  const std::uint64_t total = static_cast<std::uint64_t>(cfg.n_steps) * static_cast<std::uint64_t>(cfg.n_substeps);

  std::vector<double> out(static_cast<std::size_t>(cfg.n_paths), kInf);
  parallel_for(out.size(), [&](std::size_t i) {
    PathConfig pc = base;
    pc.path_index = cfg.stream_offset + i;
    DriverStepper st(pc);
    double f0 = f_start;
    double g0 = g_start;
    for (std::uint64_t j = 0; j < total; ++j) {
      st.advance();
      const HPoint q = group_mul(x, {st.bn(), st.bt(), st.area()});
      const double f1 = dom.value(q);
      if (!(f1 < 0.0)) {
        out[i] = (static_cast<double>(j) + f0 / (f0 - f1)) * h;
        return;
      }
      const double g1 = horizontal_grad_norm(dom, q);
      if (cfg.bridge && g0 > 0.0 && g1 > 0.0) {
        const double e = 2.0 * (f0 / g0) * (f1 / g1) / h;
        if (e < 40.0 && st.uniform(StreamComponent::BridgeKill) < std::exp(-e)) {
          out[i] = static_cast<double>(j + 1) * h;
          return;
        }
      }
      f0 = f1;
      g0 = g1;
    }
  });
  return out;
}

std::vector<SurvivalEstimate> survival_curve(const ImplicitDomain& dom, const HPoint& x,
                                             const std::vector<double>& ts, const SurvivalConfig& cfg) {
  const std::vector<double> ex = exit_times(dom, x, max_of(ts), cfg);
  std::vector<SurvivalEstimate> out;
  for (double t : ts) {
    const auto alive = std::count_if(ex.begin(), ex.end(), [t](double e) { return e > t; });
    const double n = static_cast<double>(ex.size());
    const double p = static_cast<double>(alive) / n;
    out.push_back({x, t, p, binomial_se(p, n), cfg.n_paths, 0.0});
  }
  return out;
}

SurvivalEstimate estimate_survival(const ImplicitDomain& dom, const HPoint& x, double t,
                                   const SurvivalConfig& cfg) {
  return survival_curve(dom, x, {t}, cfg).front();
}

double auto_shell_eps(double reach, double t_max) {
  return std::min(std::max(0.25 * reach, 4.0 * std::sqrt(t_max)), 0.95 * reach);
}

ShellLayout build_shell(const ImplicitDomain& dom, const std::vector<double>& t_grid, const ShellOptions& opt) {
  const double t_max = max_of(t_grid);
  const SurfaceQuadrature quad = build_quadrature(dom, opt.quadrature_level);
  const CharacteristicScan scan = characteristic_scan(dom, quad, resolved_char_tol(dom, opt.quadrature_level));
  if (!scan.flagged.empty()) {
    throw CharacteristicDomain(std::to_string(scan.flagged.size()) + " characteristic quadrature nodes");
  }
  ShellLayout out;
  const Vec3 ext = dom.bbox().extent();
  out.reach = reach_probe(dom, quad, 0.5 * std::min(ext[0], ext[1]));
  out.eps = opt.shell_eps > 0.0 ? opt.shell_eps : auto_shell_eps(out.reach, t_max);
  if (out.eps > out.reach) throw ReachExceeded("shell width exceeds the probed reach");

  std::vector<double> breaks{0.0, out.eps};
  for (double t : t_grid) {
    if (2.0 * std::sqrt(t) < out.eps) breaks.push_back(2.0 * std::sqrt(t));
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> rs, ws;
  using GL = boost::math::quadrature::gauss<double, 5>;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double mid = 0.5 * (breaks[p] + breaks[p + 1]);
    const double half = 0.5 * (breaks[p + 1] - breaks[p]);
    for (std::size_t k = 0; k < GL::abscissa().size(); ++k) {
      const double a = GL::abscissa()[k];
      const double w = GL::weights()[k];
      rs.push_back(mid - half * a);
      ws.push_back(half * w);
      if (a != 0.0) {
        rs.push_back(mid + half * a);
        ws.push_back(half * w);
      }
    }
  }

  const SurfaceQuadrature coarse = coarsen(dom, quad, static_cast<std::size_t>(opt.surface_nodes));
  for (const auto& node : coarse.nodes) {
    const double w0 = node.weight * node.sp.nh_norm;
    for (std::size_t j = 0; j < rs.size(); ++j) {
      ShellNode sn;
      sn.s = node.sp;
      sn.r = rs[j];
      sn.x = tube_point_psi(dom, node.sp, rs[j]);
      sn.weight = w0 * ws[j] * tube_jacobian(dom, node.sp, rs[j]);
      out.nodes.push_back(sn);
    }
  }
  const Extrapolated vol = volume_extrapolated(dom, 7);
  out.volume = vol.value;
  out.volume_err = vol.est_error;
  for (const auto& n : out.nodes) out.shell_volume += n.weight;
  return out;
}

std::vector<HeatContentEstimate> estimate_heat_content(const ImplicitDomain& dom, const ShellLayout& shell,
                                                       const std::vector<double>& t_grid,
                                                       const SurvivalConfig& cfg) {
  const double t_max = max_of(t_grid);
  const std::size_t nt = t_grid.size();
  const std::size_t nn = shell.nodes.size();
  std::vector<std::vector<double>> loss(nt, std::vector<double>(nn)), var(nt, std::vector<double>(nn));
  const double n = static_cast<double>(cfg.n_paths);
  for (std::size_t k = 0; k < nn; ++k) {
    SurvivalConfig c = cfg;
    c.stream_offset = cfg.stream_offset + k * static_cast<std::uint64_t>(cfg.n_paths);
    const std::vector<double> ex = exit_times(dom, shell.nodes[k].x, t_max, c);
    for (std::size_t i = 0; i < nt; ++i) {
      const double t = t_grid[i];
      const double p = static_cast<double>(std::count_if(ex.begin(), ex.end(), [t](double e) { return e > t; })) / n;
      const double w = shell.nodes[k].weight;
      loss[i][k] = w * (1.0 - p);
      var[i][k] = w * w * p * (1.0 - p) / n;
    }
  }
  std::vector<HeatContentEstimate> out;
  for (std::size_t i = 0; i < nt; ++i) {
    HeatContentEstimate e;
    e.t = t_grid[i];
    e.Q_hat = shell.volume - pairwise_sum(loss[i]);
    e.std_err = std::sqrt(pairwise_sum(var[i]));
    e.shell_eps = shell.eps;
    e.interior_volume = shell.volume - shell.shell_volume;
    e.n_shell_nodes = static_cast<int>(nn);
    e.n_paths_per_node = cfg.n_paths;
    e.interior_bound = std::exp(-shell.eps * shell.eps / (8.0 * e.t));
    out.push_back(e);
  }
  return out;
}

HeatContentEstimate estimate_heat_content(const ImplicitDomain& dom, double t, double shell_eps,
                                          const SurvivalConfig& cfg) {
  ShellOptions opt;
  opt.shell_eps = shell_eps;
  return estimate_heat_content(dom, build_shell(dom, {t}, opt), {t}, cfg).front();
}

PredictedCoefficients predicted_coefficients(const ImplicitDomain& dom, int quadrature_level) {
  const SurfaceQuadrature quad = build_quadrature(dom, quadrature_level);
  if (!characteristic_scan(dom, quad, resolved_char_tol(dom, quadrature_level)).flagged.empty()) {
    throw CharacteristicDomain("boundary has characteristic points");
  }
  const BoundaryIntegrals bi = boundary_integrals(dom, quadrature_level);
  const Extrapolated vol = volume_extrapolated(dom, 7);
  const double k = std::sqrt(2.0 / std::numbers::pi);
  return {vol.value, k * bi.sigma0.value, 0.25 * bi.mean_curvature.value,
          vol.est_error, k * bi.sigma0.est_error, 0.25 * bi.mean_curvature.est_error};
}

ExpansionFit fit_expansion(const std::vector<FitPoint>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw ParameterOutOfRange("fit needs at least 3 points");
  bool weighted = true;
  double mean_s = 0.0;
  for (const auto& p : points) {
    if (!(p.t > 0.0)) throw ParameterOutOfRange("fit t values must be positive");
    if (!(p.std_err > 0.0)) weighted = false;
    mean_s += std::sqrt(p.t);
  }
  mean_s /= static_cast<double>(n);
  // Basis {1, sqrt t - m, t}; mapped back to {1, sqrt t, t} afterwards.
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::sqrt(points[i].t) - mean_s;
    x(i, 2) = points[i].t;
    y[i] = points[i].q;
    w[i] = weighted ? 1.0 / points[i].std_err : 1.0;
  }
  const Eigen::MatrixXd xw = w.asDiagonal() * x;
  const Eigen::VectorXd yw = w.asDiagonal() * y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto sv = svd.singularValues();
  const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : kInf;
  if (!(cond <= 1e8)) throw IllConditioned("design matrix condition number " + std::to_string(cond));
  const Eigen::Vector3d b = svd.solve(yw);
  const Eigen::MatrixXd v = svd.matrixV();
  Mat3 cov = v * sv.cwiseInverse().cwiseAbs2().asDiagonal() * v.transpose();
  const double rss = (xw * b - yw).squaredNorm();
  if (!weighted) cov *= n > 3 ? rss / static_cast<double>(n - 3) : 0.0;

  // (c0, -c1, c2) = L b
  Mat3 l = Mat3::Identity();
  l(0, 1) = -mean_s;
  const Eigen::Vector3d c = l * b;
  Mat3 flip = Mat3::Identity();
  flip(1, 1) = -1.0;
  ExpansionFit f;
  f.c0 = c[0];
  f.c1 = -c[1];
  f.c2 = c[2];
  f.covariance = flip * l * cov * l.transpose() * flip;
  for (const auto& p : points) f.t_grid.push_back(p.t);
  f.residual_norm = std::sqrt(rss);
  f.condition = cond;
  return f;
}

ExpansionFit fit_expansion(const std::vector<HeatContentEstimate>& points) {
  std::vector<FitPoint> pts;
  for (const auto& p : points) pts.push_back({p.t, p.Q_hat, p.std_err});
  return fit_expansion(pts);
}

namespace {

enum EventBit : std::uint16_t {
  kI1 = 1 << 0,
  kI2 = 1 << 1,
  kI3 = 1 << 2,
  kE = 1 << 3,
  kInside = 1 << 4,
  kSurvive = 1 << 5,
  kRes1 = 1 << 6,
  kRes2 = 1 << 7,
  kCensored = 1 << 8,
};

}  // namespace

std::vector<EventDecomposition> decompose_events(const ImplicitDomain& dom, const ShellLayout& shell,
                                                 const std::vector<double>& t_grid, const SurvivalConfig& cfg,
                                                 double delta) {
  const double t_max = max_of(t_grid);
  if (delta <= 0.0) delta = shell.eps;
  const PathConfig base{t_max, cfg.n_steps, cfg.n_substeps, cfg.seed, 0};
  base.validate();
  std::vector<std::size_t> kt;
  for (double t : t_grid) kt.push_back(grid_index(t, base.step()));
  const std::size_t nt = t_grid.size();
  const std::size_t nn = shell.nodes.size();
  constexpr int kEvents = 8;
  // prob[e][i][k]: event e, t index i, node k
  std::vector<std::vector<std::vector<double>>> prob(kEvents, std::vector<std::vector<double>>(nt, std::vector<double>(nn)));
  std::vector<double> n_eff(nn);
  std::vector<double> censored(nn);
  std::vector<std::uint16_t> masks(static_cast<std::size_t>(cfg.n_paths) * nt);

  for (std::size_t k = 0; k < nn; ++k) {
    const ShellNode& node = shell.nodes[k];
    const GeodesicChart chart = chart_from_boundary(node.s, node.r);
    parallel_for(static_cast<std::size_t>(cfg.n_paths), [&](std::size_t p) {
      PathConfig pc = base;
      pc.path_index = cfg.stream_offset + k * static_cast<std::uint64_t>(cfg.n_paths) + p;
      const DriverPath path = sample_driver(pc);
      const FramePath fp = truncated_frame_process(chart, path);
      std::uint16_t* m = &masks[p * nt];
      if (fp.censored) {
        for (std::size_t i = 0; i < nt; ++i) m[i] = kCensored;
        return;
      }
      std::vector<bool> in(fp.points.size());
      std::size_t exit_k = fp.points.size();
      for (std::size_t j = 0; j < fp.points.size(); ++j) {
        in[j] = dom.value(fp.points[j]) < 0.0;
        if (!in[j] && exit_k == fp.points.size()) exit_k = j;
      }
      for (std::size_t i = 0; i < nt; ++i) {
        const MaxStats ms = max_stats(path, kt[i]);
        const bool below = ms.xi < node.r;
        const bool inside = in[ms.index];
        const bool window = ms.BT_at_tau * ms.BT_at_tau + std::abs(ms.A_at_tau) < delta;
        std::uint16_t bits = 0;
        if (below && window) bits |= kI1;
        if (below && !inside && window) bits |= kI2;
        if (!below && inside && window) bits |= kI3;
        if (inside && window) bits |= kE;
        if (inside) bits |= kInside;
        if (exit_k > kt[i]) bits |= kSurvive;
        if (ms.index < exit_k && exit_k <= kt[i]) bits |= kRes1;
        if (exit_k <= ms.index && inside) bits |= kRes2;
        m[i] = bits;
      }
    });
    std::size_t cens = 0;
    std::vector<std::array<std::size_t, kEvents>> counts(nt, std::array<std::size_t, kEvents>{});
    for (std::size_t p = 0; p < static_cast<std::size_t>(cfg.n_paths); ++p) {
      if (masks[p * nt] & kCensored) {
        ++cens;
        continue;
      }
      for (std::size_t i = 0; i < nt; ++i) {
        for (int e = 0; e < kEvents; ++e) counts[i][e] += (masks[p * nt + i] >> e) & 1u;
      }
    }
    n_eff[k] = static_cast<double>(static_cast<std::size_t>(cfg.n_paths) - cens);
    censored[k] = static_cast<double>(cens);
    for (std::size_t i = 0; i < nt; ++i) {
      for (int e = 0; e < kEvents; ++e) prob[e][i][k] = n_eff[k] > 0 ? counts[i][e] / n_eff[k] : 0.0;
    }
  }

  std::vector<EventDecomposition> out;
  double total_cens = 0.0;
  for (double c : censored) total_cens += c;
  for (std::size_t i = 0; i < nt; ++i) {
    auto integral = [&](int e, double& value, double& se) {
      std::vector<double> v(nn), s(nn);
      for (std::size_t k = 0; k < nn; ++k) {
        const double w = shell.nodes[k].weight;
        v[k] = w * prob[e][i][k];
        s[k] = n_eff[k] > 0 ? w * w * prob[e][i][k] * (1.0 - prob[e][i][k]) / n_eff[k] : 0.0;
      }
      value = pairwise_sum(v);
      se = std::sqrt(pairwise_sum(s));
    };
    EventDecomposition d;
    d.t = t_grid[i];
    integral(0, d.I1, d.se_I1);
    integral(1, d.I2, d.se_I2);
    integral(2, d.I3, d.se_I3);
    integral(3, d.E_direct, d.se_E);
    integral(4, d.inside_at_tau, d.se_inside);
    integral(5, d.survive, d.se_survive);
    integral(6, d.residual_tauT, d.se_r1);
    integral(7, d.residual_TtauIn, d.se_r2);
    d.censored_fraction = nn > 0 ? total_cens / (static_cast<double>(nn) * cfg.n_paths) : 0.0;
    d.shell_volume = shell.shell_volume;
    out.push_back(d);
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterOutOfRange("slope needs matching samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace hheat
