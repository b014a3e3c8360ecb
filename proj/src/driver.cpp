#include "hheat/driver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hheat/errors.hpp"

namespace hheat {

void PathConfig::validate() const {
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ParameterOutOfRange("t_final must be positive");
  if (n_steps < 1) throw ParameterOutOfRange("n_steps must be positive");
  if (n_substeps < 1) throw ParameterOutOfRange("n_substeps must be positive");
}

DriverStepper::DriverStepper(const PathConfig& cfg, bool swap_components)
    : rng_(cfg.seed),
      stream_(cfg.path_index),
      h_(cfg.substep()),
      sd_(std::sqrt(cfg.substep())),
      swap_(swap_components) {}

void DriverStepper::advance() {
  const auto z = rng_.normals(stream_index(count_, StreamComponent::Increment), stream_);
  dbn_ = sd_ * (swap_ ? z[1] : z[0]);
  dbt_ = sd_ * (swap_ ? z[0] : z[1]);
  // Midpoint rule; the half-increment terms cancel in the area.
  a_ += (bn_ + 0.5 * dbn_) * dbt_ - (bt_ + 0.5 * dbt_) * dbn_;
  bn_ += dbn_;
  bt_ += dbt_;
  ++count_;
}

double DriverStepper::uniform(StreamComponent comp) const {
  return rng_.uniforms(stream_index(count_ - 1, comp), stream_)[0];
}

DriverPath sample_driver(const PathConfig& cfg, bool swap_components) {
  cfg.validate();
  DriverPath p;
  const auto n = static_cast<std::size_t>(cfg.n_steps) + 1;
  p.times.resize(n);
  p.BN.resize(n);
  p.BT.resize(n);
  p.A.resize(n);
  DriverStepper st(cfg, swap_components);
  const double dt = cfg.step();
  for (std::size_t k = 1; k < n; ++k) {
    for (int j = 0; j < cfg.n_substeps; ++j) st.advance();
    p.times[k] = static_cast<double>(k) * dt;
    p.BN[k] = st.bn();
    p.BT[k] = st.bt();
    p.A[k] = st.area();
  }
  return p;
}

MaxStats max_stats(const DriverPath& path, std::size_t last) {
  last = std::min(last, path.BN.size() - 1);
  std::size_t k = 0;
  for (std::size_t i = 1; i <= last; ++i) {
    if (path.BN[i] > path.BN[k]) k = i;
  }
  return {path.BN[k], path.times[k], path.BT[k], path.A[k], k};
}

double joint_density_phi(double xi, double tau, double t) {
  if (!(t > 0.0)) throw ParameterOutOfRange("t must be positive");
  if (xi < 0.0 || tau <= 0.0 || tau >= t) return 0.0;
  return xi * std::exp(-xi * xi / (2.0 * tau)) / (std::numbers::pi * std::pow(tau, 1.5) * std::sqrt(t - tau));
}

MaxArgmax sample_max_argmax(const Philox4x32& rng, std::uint64_t index, std::uint64_t stream, double t) {
  if (!(t > 0.0)) throw ParameterOutOfRange("t must be positive");
  const auto u = rng.uniforms(stream_index(index, StreamComponent::Exact), stream);
  const double s = std::sin(0.5 * std::numbers::pi * u[0]);
  const double tau = t * s * s;
  return {std::sqrt(-2.0 * tau * std::log(u[1])), tau};
}

std::vector<HPoint> exact_group_bm(const HPoint& x, const DriverPath& path) {
  std::vector<HPoint> out(path.BN.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = group_mul(x, {path.BN[k], path.BT[k], path.A[k]});
  return out;
}

FramePath truncated_frame_process(const GeodesicChart& chart, const DriverPath& path) {
  FramePath out;
  out.points.reserve(path.BN.size());
  for (std::size_t k = 0; k < path.BN.size(); ++k) {
    const ChartCoords c{path.BN[k], path.BT[k], path.A[k]};
    if (!chart.box.contains(c)) {
      out.censored = true;
      break;
    }
    out.points.push_back(phi_unchecked(chart, c));
  }
  return out;
}

}  // namespace hheat
