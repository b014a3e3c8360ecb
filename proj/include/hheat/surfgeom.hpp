#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hheat/domain.hpp"

namespace hheat {

inline constexpr double kDefaultCharTol = 1e-6;

/// 1e-10 times the bbox diameter.
double surface_tol(const ImplicitDomain& dom);

struct SurfacePoint {
  HPoint p;
  FrameVector n;         // outward unit g1-normal
  double nh_norm = 0.0;  // |(n1, n2)|
};

struct QuadratureNode {
  SurfacePoint sp;
  double weight = 0.0;  // g1 surface area carried by the node
};

struct SurfaceQuadrature {
  std::vector<QuadratureNode> nodes;
  int level = 0;
  double est_error = 0.0;  // estimated relative error of the g1 area
};

/// Horizontal gradient (X1 F, X2 F) and vertical derivative X3 F.
Vec3 frame_gradient(const ImplicitDomain& dom, const HPoint& p);

SurfacePoint g1_normal(const ImplicitDomain& dom, const HPoint& p);

/// Newton projection along the Euclidean gradient onto {F = 0}.
HPoint project_to_surface(const ImplicitDomain& dom, const HPoint& p, int max_iter = 50);

/// Inward horizontal normal N and horizontal tangent T.
std::pair<FrameVector, FrameVector> horizontal_frame(const SurfacePoint& sp,
                                                     double char_tol = kDefaultCharTol);

double normal_curvature_lambda(const SurfacePoint& sp, double char_tol = kDefaultCharTol);

double horizontal_mean_curvature(const ImplicitDomain& dom, const SurfacePoint& sp,
                                 double char_tol = kDefaultCharTol);

/// Integrates T along the surface for the given arclength (negative reverses).
std::vector<SurfacePoint> legendrian_trace(const ImplicitDomain& dom, const SurfacePoint& sp,
                                           double arclength, double step,
                                           double char_tol = kDefaultCharTol);

/// Signed curvature of the planar projection of a polyline at index i,
/// oriented by the direction of travel.
double planar_curvature(const std::vector<SurfacePoint>& trace, std::size_t i);

struct CharacteristicScan {
  std::vector<std::size_t> flagged;
  double min_nh_norm = 1.0;
};

CharacteristicScan characteristic_scan(const ImplicitDomain& dom, const SurfaceQuadrature& quad,
                                       double char_tol = kDefaultCharTol);

/// Marching-tetrahedra surface quadrature; level l uses 8 * 2^l cells along
/// the longest bbox edge.
SurfaceQuadrature build_quadrature(const ImplicitDomain& dom, int level);

/// Scan tolerance at quadrature resolution: max(char_tol, 4 cell / diameter).
/// An isolated characteristic point between nodes leaves nh_norm of order the cell size.
double resolved_char_tol(const ImplicitDomain& dom, int level, double char_tol = kDefaultCharTol);

double surface_area(const SurfaceQuadrature& quad);
double horizontal_perimeter(const ImplicitDomain& dom, const SurfaceQuadrature& quad);
double total_mean_curvature(const ImplicitDomain& dom, const SurfaceQuadrature& quad,
                            double char_tol = kDefaultCharTol);

/// Lebesgue volume of {F < 0} inside bbox by an adaptive octree.
double volume(const ImplicitDomain& dom, int max_depth = 8);

/// Value with an error estimate from two refinement levels.
struct Extrapolated {
  double value = 0.0;
  double est_error = 0.0;
};

Extrapolated volume_extrapolated(const ImplicitDomain& dom, int max_depth = 8);

/// Richardson limits of sigma_0 and the integral of H d sigma_0 from levels
/// l and l + 1.
struct BoundaryIntegrals {
  Extrapolated sigma;
  Extrapolated sigma0;
  Extrapolated mean_curvature;
};

BoundaryIntegrals boundary_integrals(const ImplicitDomain& dom, int level,
                                     double char_tol = kDefaultCharTol);

/// Merges nodes into about target_count patches on a regular grid, keeping
/// the total weight and the weighted nh_norm of each patch.
SurfaceQuadrature coarsen(const ImplicitDomain& dom, const SurfaceQuadrature& quad,
                          std::size_t target_count);

}  // namespace hheat
