#pragma once

#include <array>

#include <Eigen/Dense>

namespace hheat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A point of the first Heisenberg group in global coordinates.
struct HPoint {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;

  Vec3 vec() const { return {x1, x2, x3}; }
  static HPoint from(const Vec3& v) { return {v[0], v[1], v[2]}; }
  bool is_finite() const;

  friend bool operator==(const HPoint&, const HPoint&) = default;
};

/// Throws ParameterOutOfRange on NaN or infinite components.
HPoint checked_point(double x1, double x2, double x3);

/// Tangent vector a X1 + b X2 + c X3 in the left-invariant frame.
struct FrameVector {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  bool horizontal() const { return c == 0.0; }
  double g1_norm() const;
  /// Only defined for horizontal vectors; throws ParameterOutOfRange otherwise.
  double g0_norm() const;
  /// Coordinate vector of the tangent vector at p.
  Vec3 cartesian(const HPoint& p) const;
  /// Frame coefficients of a coordinate vector at p.
  static FrameVector from_cartesian(const HPoint& p, const Vec3& v);
};

double g1_inner(const FrameVector& u, const FrameVector& v);

HPoint group_mul(const HPoint& p, const HPoint& q);
HPoint group_inv(const HPoint& p);

/// Anisotropic dilation (r x1, r x2, r^2 x3).
HPoint dilate(const HPoint& p, double r);

/// X1, X2, X3 at p as coordinate vectors.
std::array<Vec3, 3> frame_at(const HPoint& p);

/// ((x1^2 + x2^2)^2 + 4 x3^2)^(1/4)
double koranyi_norm(const HPoint& p);

/// Normalizes an angle into (-pi, pi].
double normalize_angle(double theta);

struct GeodesicParams {
  HPoint base;
  double theta = 0.0;   // initial direction cos(theta) X1 + sin(theta) X2
  double lambda = 0.0;  // signed curvature

  /// Half-width of the maximal parameter interval; +inf when lambda == 0.
  double max_parameter() const;
};

/// Unit-speed CC geodesic. Throws ParameterOutOfRange when |t| > 2 pi/|lambda|.
HPoint cc_geodesic(const GeodesicParams& g, double t);

/// Horizontal velocity of the geodesic at t, in frame coefficients.
FrameVector cc_geodesic_velocity(const GeodesicParams& g, double t);

/// Geodesic parameters (theta, lambda) and length joining p to q.
struct ShootingSolution {
  double theta = 0.0;
  double lambda = 0.0;
  double length = 0.0;
};

ShootingSolution cc_shoot(const HPoint& p, const HPoint& q);

/// Carnot-Caratheodory distance. Throws ConvergenceFailure if shooting fails.
double cc_distance(const HPoint& p, const HPoint& q);

namespace detail {
// sin(x)/x, (1-cos x)/x, (x - sin x)/x^2 with Taylor branches near 0.
double sinc(double x);
double versinc(double x);
double vertical_gap(double x);
}  // namespace detail

}  // namespace hheat
