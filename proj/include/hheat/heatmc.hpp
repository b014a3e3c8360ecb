#pragma once

#include <cstdint>
#include <vector>

#include "hheat/driver.hpp"
#include "hheat/surfgeom.hpp"
#include "hheat/tubechart.hpp"

namespace hheat {

struct SurvivalConfig {
  int n_paths = 10000;
  int n_steps = 64;  // grid steps over the largest t requested
  int n_substeps = 8;
  std::uint64_t seed = 0;
  std::uint64_t stream_offset = 0;  // path_index = stream_offset + i
  bool bridge = true;               // Brownian-bridge crossing correction per substep
};

struct SurvivalEstimate {
  HPoint x;
  double t = 0.0;
  double p_hat = 0.0;
  double std_err = 0.0;
  int n_paths = 0;
  double censored_fraction = 0.0;
};

/// Exit time of each path started at x, or +inf when it survives to t_final.
std::vector<double> exit_times(const ImplicitDomain& dom, const HPoint& x, double t_final,
                               const SurvivalConfig& cfg);

/// Survival at every t in ts from one path population (common random numbers).
std::vector<SurvivalEstimate> survival_curve(const ImplicitDomain& dom, const HPoint& x,
                                             const std::vector<double>& ts, const SurvivalConfig& cfg);

SurvivalEstimate estimate_survival(const ImplicitDomain& dom, const HPoint& x, double t,
                                   const SurvivalConfig& cfg);

struct ShellNode {
  SurfacePoint s;
  double r = 0.0;
  double weight = 0.0;  // sigma_0 weight * radial weight * J_Psi
  HPoint x;
};

struct ShellOptions {
  double shell_eps = 0.0;  // <= 0 selects the automatic value
  int surface_nodes = 8;
  int quadrature_level = 3;
  int radial_points = 5;  // Gauss-Legendre points per radial panel
};

struct ShellLayout {
  std::vector<ShellNode> nodes;
  double eps = 0.0;
  double reach = 0.0;
  double volume = 0.0;
  double volume_err = 0.0;
  double shell_volume = 0.0;
};

/// max(0.25 reach, 4 sqrt(t_max)), kept below the reach.
double auto_shell_eps(double reach, double t_max);

/// Nodes (s, r) over the shell of width eps with radial panels broken at
/// 2 sqrt(t) for each t in t_grid. Throws ReachExceeded when eps exceeds the probed reach.
ShellLayout build_shell(const ImplicitDomain& dom, const std::vector<double>& t_grid, const ShellOptions& opt);

struct HeatContentEstimate {
  double t = 0.0;
  double Q_hat = 0.0;
  double std_err = 0.0;
  double shell_eps = 0.0;
  double interior_volume = 0.0;
  int n_shell_nodes = 0;
  int n_paths_per_node = 0;
  double censored_fraction = 0.0;
  double interior_bound = 0.0;  // exp(-eps^2 / 8t), the neglected interior loss scale
};

/// Q(t) = volume - sum over shell nodes of weight * (1 - p_hat), one path
/// population per node shared across t.
std::vector<HeatContentEstimate> estimate_heat_content(const ImplicitDomain& dom, const ShellLayout& shell,
                                                       const std::vector<double>& t_grid,
                                                       const SurvivalConfig& cfg);

HeatContentEstimate estimate_heat_content(const ImplicitDomain& dom, double t, double shell_eps,
                                          const SurvivalConfig& cfg);

struct PredictedCoefficients {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double c0_err = 0.0, c1_err = 0.0, c2_err = 0.0;
};

/// (volume, sqrt(2/pi) sigma_0, int H dsigma_0 / 4). Throws CharacteristicDomain.
PredictedCoefficients predicted_coefficients(const ImplicitDomain& dom, int quadrature_level = 3);

struct ExpansionFit {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;  // Q(t) ~ c0 - c1 sqrt(t) + c2 t
  Mat3 covariance = Mat3::Zero();
  std::vector<double> t_grid;
  double residual_norm = 0.0;
  double condition = 0.0;
};

struct FitPoint {
  double t = 0.0;
  double q = 0.0;
  double std_err = 0.0;
};

/// Weighted least squares on {1, sqrt t, t}. Throws IllConditioned.
ExpansionFit fit_expansion(const std::vector<FitPoint>& points);
ExpansionFit fit_expansion(const std::vector<HeatContentEstimate>& points);

struct EventDecomposition {
  double t = 0.0;
  double I1 = 0.0, I2 = 0.0, I3 = 0.0;
  double residual_tauT = 0.0;    // int P(tau_t < T' <= t)
  double residual_TtauIn = 0.0;  // int P(T' <= tau_t, x'_tau in Omega)
  double se_I1 = 0.0, se_I2 = 0.0, se_I3 = 0.0, se_r1 = 0.0, se_r2 = 0.0;
  double E_direct = 0.0, se_E = 0.0;          // int P(x'_tau in Omega, window)
  double inside_at_tau = 0.0, se_inside = 0.0;  // int P(x'_tau in Omega)
  double survive = 0.0, se_survive = 0.0;     // int P(T' > t)
  double censored_fraction = 0.0;
  double shell_volume = 0.0;
};

/// Event integrals of the truncated process over shell nodes, per t.
/// delta <= 0 uses the shell width.
std::vector<EventDecomposition> decompose_events(const ImplicitDomain& dom, const ShellLayout& shell,
                                                 const std::vector<double>& t_grid, const SurvivalConfig& cfg,
                                                 double delta = 0.0);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hheat
