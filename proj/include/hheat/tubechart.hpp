#pragma once

#include <array>
#include <vector>

#include "hheat/surfgeom.hpp"

namespace hheat {

struct ChartCoords {
  double xi = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Symmetric box |xi| <= xi_max, |y| <= y_max, |z| <= z_max.
struct ChartBox {
  double xi_max = 0.0;
  double y_max = 0.0;
  double z_max = 0.0;

  bool contains(const ChartCoords& c) const {
    return std::abs(c.xi) <= xi_max && std::abs(c.y) <= y_max && std::abs(c.z) <= z_max;
  }
};

/// phi(xi, y, z) = exp_base(-xi N + y T + z Z) for the frame extension built
/// from (theta, lambda) at base.
struct GeodesicChart {
  HPoint base;
  double theta = 0.0;
  double lambda = 0.0;
  double r = 0.0;
  ChartBox box;
};

ChartBox default_chart_box(double lambda, double r);

GeodesicChart make_chart(const HPoint& base, double theta, double lambda, double r = 0.0);

/// Chart at x = Psi(s, r) whose axis reaches s at xi = r.
GeodesicChart chart_from_boundary(const SurfacePoint& s, double r, double char_tol = kDefaultCharTol);

/// Throws OutOfChart outside the chart box.
HPoint phi(const GeodesicChart& chart, const ChartCoords& c);

/// No box check; used by samplers that flag excursions themselves.
HPoint phi_unchecked(const GeodesicChart& chart, const ChartCoords& c);

ChartCoords phi_inverse(const GeodesicChart& chart, const HPoint& q);

double phi_jacobian_det(double lambda, double y);

double homogeneous_norm(const ChartCoords& c);

/// koranyi_norm(base^{-1} * phi(c)) / homogeneous_norm(c)
double comparability_ratio(const GeodesicChart& chart, const ChartCoords& c);

/// koranyi_norm(base^{-1} * phi(c)) / ((xi^2 + y^2)^2 + 4 z^2)^(1/4); tends to 1 at 0.
double expansion_ratio(const GeodesicChart& chart, const ChartCoords& c);

/// The extended frame N, T, Z at q as coordinate vectors.
std::array<Vec3, 3> chart_frame(const GeodesicChart& chart, const HPoint& q);

/// The factor f with Z = f X3.
double chart_frame_f(const GeodesicChart& chart, const HPoint& q);

/// h(y, z) = r - xi* where F(phi(xi*, y, z)) = 0 near xi = r.
double boundary_graph_h(const ImplicitDomain& dom, const GeodesicChart& chart, double y, double z);

struct HExpansion {
  double half_H = 0.0;
  double k1 = 0.0;
  double cubic_bound = 0.0;
};

HExpansion h_expansion(const ImplicitDomain& dom, const GeodesicChart& chart);

/// Point at parameter r on the normal geodesic leaving s along N(s).
HPoint tube_point(const SurfacePoint& s, double r, double char_tol = kDefaultCharTol);

/// tube_point with validation; throws ReachExceeded when the point is not at
/// distance r from s or the segment leaves the domain.
HPoint tube_point_psi(const ImplicitDomain& dom, const SurfacePoint& s, double r);

/// Jacobian of (s, r) -> Psi(s, r) against sigma_0 x dr.
double tube_jacobian(const ImplicitDomain& dom, const SurfacePoint& s, double r);

/// True when no node of the quadrature is closer to Psi(s, r) than r.
bool nearest_point_holds(const ImplicitDomain& dom, const SurfaceQuadrature& quad,
                         const SurfacePoint& s, double r);

/// Largest r <= r_max for which the nearest-point property holds at every
/// sampled node, by bisection.
double reach_probe(const ImplicitDomain& dom, const SurfaceQuadrature& quad, double r_max,
                   std::size_t n_samples = 24);

}  // namespace hheat
