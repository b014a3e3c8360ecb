#pragma once

#include <cstdint>
#include <vector>

#include "hheat/rng.hpp"
#include "hheat/tubechart.hpp"

namespace hheat {

struct PathConfig {
  double t_final = 1.0;
  int n_steps = 1024;
  int n_substeps = 8;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  double step() const { return t_final / n_steps; }
  double substep() const { return step() / n_substeps; }
  /// Throws ParameterOutOfRange.
  void validate() const;
};

/// Substep-resolution Brownian pair (B^N, B^T) with Levy area, generated
/// from the keyed stream of (seed, path_index).
class DriverStepper {
 public:
  explicit DriverStepper(const PathConfig& cfg, bool swap_components = false);

  /// Advances one substep.
  void advance();

  /// Uniform attached to the substep just taken.
  double uniform(StreamComponent comp) const;

  double bn() const { return bn_; }
  double bt() const { return bt_; }
  double area() const { return a_; }
  double dbn() const { return dbn_; }
  double dbt() const { return dbt_; }
  std::uint64_t count() const { return count_; }
  double time() const { return static_cast<double>(count_) * h_; }

 private:
  Philox4x32 rng_;
  std::uint64_t stream_;
  double h_;
  double sd_;
  bool swap_;
  std::uint64_t count_ = 0;
  double bn_ = 0.0, bt_ = 0.0, a_ = 0.0;
  double dbn_ = 0.0, dbt_ = 0.0;
};

struct DriverPath {
  std::vector<double> times;
  std::vector<double> BN;
  std::vector<double> BT;
  std::vector<double> A;  // int B^N dB^T - B^T dB^N
};

/// swap_components exchanges the roles of the two Gaussian streams.
DriverPath sample_driver(const PathConfig& cfg, bool swap_components = false);

struct MaxStats {
  double xi = 0.0;
  double tau = 0.0;
  double BT_at_tau = 0.0;
  double A_at_tau = 0.0;
  std::size_t index = 0;
};

/// Grid argmax of B^N over steps [0, last]; last defaults to the whole path.
MaxStats max_stats(const DriverPath& path, std::size_t last = static_cast<std::size_t>(-1));

/// Density of (max, argmax) of B^N on [0, t].
double joint_density_phi(double xi, double tau, double t);

struct MaxArgmax {
  double xi = 0.0;
  double tau = 0.0;
};

/// Exact draw: arcsine tau, then Rayleigh xi with scale sqrt(tau).
MaxArgmax sample_max_argmax(const Philox4x32& rng, std::uint64_t index, std::uint64_t stream, double t);

/// x * (B^N, B^T, A) at every grid time.
std::vector<HPoint> exact_group_bm(const HPoint& x, const DriverPath& path);

struct FramePath {
  std::vector<HPoint> points;  // up to the first excursion when censored
  bool censored = false;
};

/// phi(chart, (B^N, B^T, A)) at every grid time; stops at the first point
/// outside the chart box.
FramePath truncated_frame_process(const GeodesicChart& chart, const DriverPath& path);

}  // namespace hheat
