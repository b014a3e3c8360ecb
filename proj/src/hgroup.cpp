#include "hheat/hgroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hheat/errors.hpp"

namespace hheat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSeriesCutoff = 1e-4;

// Ratio of vertical gap to squared planar chord for a geodesic of total
// turning psi: (psi - sin psi) / (4 sin^2(psi/2)). Odd and increasing on
// (-2 pi, 2 pi).
double gap_ratio(double psi) {
  if (std::abs(psi) < kSeriesCutoff) {
    return psi / 6.0 + psi * psi * psi / 360.0;
  }
  const double s = std::sin(0.5 * psi);
  return (psi - std::sin(psi)) / (4.0 * s * s);
}

double gap_ratio_derivative(double psi) {
  if (std::abs(psi) < kSeriesCutoff) {
    return 1.0 / 6.0 + psi * psi / 120.0;
  }
  const double s = std::sin(0.5 * psi);
  const double c = std::cos(0.5 * psi);
  const double num = psi - std::sin(psi);
  // d/dpsi [num / (4 s^2)] = (1 - cos psi)/(4 s^2) - num * c / (4 s^3)
  return (1.0 - std::cos(psi)) / (4.0 * s * s) - num * c / (4.0 * s * s * s);
}

}  // namespace

namespace detail {

double sinc(double x) {
  if (std::abs(x) < kSeriesCutoff) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

double versinc(double x) {
  if (std::abs(x) < kSeriesCutoff) return 0.5 * x - x * x * x / 24.0;
  const double s = std::sin(0.5 * x);
  return 2.0 * s * s / x;
}

double vertical_gap(double x) {
  if (std::abs(x) < kSeriesCutoff) return x / 6.0 - x * x * x / 120.0;
  return (x - std::sin(x)) / (x * x);
}

}  // namespace detail

bool HPoint::is_finite() const {
  return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(x3);
}

HPoint checked_point(double x1, double x2, double x3) {
  HPoint p{x1, x2, x3};
  if (!p.is_finite()) throw ParameterOutOfRange("non-finite point coordinate");
  return p;
}

double FrameVector::g1_norm() const { return std::sqrt(a * a + b * b + c * c); }

double FrameVector::g0_norm() const {
  if (!horizontal()) throw ParameterOutOfRange("g0 norm of a non-horizontal vector");
  return std::hypot(a, b);
}

Vec3 FrameVector::cartesian(const HPoint& p) const {
  return {a, b, -a * p.x2 + b * p.x1 + c};
}

FrameVector FrameVector::from_cartesian(const HPoint& p, const Vec3& v) {
  return {v[0], v[1], v[2] + p.x2 * v[0] - p.x1 * v[1]};
}

double g1_inner(const FrameVector& u, const FrameVector& v) {
  return u.a * v.a + u.b * v.b + u.c * v.c;
}

HPoint group_mul(const HPoint& p, const HPoint& q) {
  return {p.x1 + q.x1, p.x2 + q.x2, p.x3 + q.x3 + p.x1 * q.x2 - p.x2 * q.x1};
}

HPoint group_inv(const HPoint& p) { return {-p.x1, -p.x2, -p.x3}; }

HPoint dilate(const HPoint& p, double r) { return {r * p.x1, r * p.x2, r * r * p.x3}; }

std::array<Vec3, 3> frame_at(const HPoint& p) {
  return {Vec3{1.0, 0.0, -p.x2}, Vec3{0.0, 1.0, p.x1}, Vec3{0.0, 0.0, 1.0}};
}

double koranyi_norm(const HPoint& p) {
  const double h2 = p.x1 * p.x1 + p.x2 * p.x2;
  return std::pow(h2 * h2 + 4.0 * p.x3 * p.x3, 0.25);
}

double normalize_angle(double theta) {
  double a = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

double GeodesicParams::max_parameter() const {
  if (lambda == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * kPi / std::abs(lambda);
}

HPoint cc_geodesic(const GeodesicParams& g, double t) {
  if (std::abs(t) > g.max_parameter()) {
    throw ParameterOutOfRange("geodesic parameter beyond 2 pi/|lambda|");
  }
  const double psi = g.lambda * t;
  const double s = detail::sinc(psi);
  const double c = detail::versinc(psi);
  const double ct = std::cos(g.theta);
  const double st = std::sin(g.theta);
  const HPoint step{t * (ct * s + st * c), t * (-ct * c + st * s),
                    -t * t * detail::vertical_gap(psi)};
  return group_mul(g.base, step);
}

FrameVector cc_geodesic_velocity(const GeodesicParams& g, double t) {
  const double a = g.theta - g.lambda * t;
  return {std::cos(a), std::sin(a), 0.0};
}

ShootingSolution cc_shoot(const HPoint& p, const HPoint& q) {
  const HPoint w = group_mul(group_inv(p), q);
  const double chord2 = w.x1 * w.x1 + w.x2 * w.x2;
  if (chord2 < 1e-14) {
    // Vertical target: a full circle, lambda t = +-2 pi.
    const double len = std::sqrt(2.0 * kPi * std::abs(w.x3));
    if (len == 0.0) return {};
    const double psi = w.x3 > 0.0 ? -2.0 * kPi : 2.0 * kPi;
    return {0.0, psi / len, len};
  }
  const double target = -w.x3 / chord2;

  // Solve gap_ratio(psi) = target on (-2 pi, 2 pi): safeguarded Newton inside
  // a bracket. Each rung of the ladder moves the bracket closer to +-2 pi.
  double psi = 0.0;
  bool converged = false;
  for (int ladder = 0; ladder < 8 && !converged; ++ladder) {
    const double margin = std::ldexp(1e-2, -6 * ladder);
    double lo = -2.0 * kPi + margin;
    double hi = 2.0 * kPi - margin;
    if (gap_ratio(lo) > target || gap_ratio(hi) < target) continue;
    psi = std::clamp(psi, lo, hi);
    for (int it = 0; it < 200; ++it) {
      const double f = gap_ratio(psi) - target;
      if (f == 0.0) {
        converged = true;
        break;
      }
      if (f > 0.0) hi = psi; else lo = psi;
      double next = psi - f / gap_ratio_derivative(psi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const bool done = std::abs(next - psi) <= 1e-15 * (1.0 + std::abs(psi)) || hi - lo <= 4e-16 * (1.0 + std::abs(psi));
      psi = next;
      if (done) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) throw ConvergenceFailure("cc_distance shooting did not converge");

  const double chord = std::sqrt(chord2);
  const double half = 0.5 * psi;
  const double len = std::abs(half) < 1e-8 ? chord : chord * std::abs(half) / std::abs(std::sin(half));
  // Planar endpoint is len * (S - iC) e^{i theta}.
  const double s = detail::sinc(psi);
  const double c = detail::versinc(psi);
  const double theta = normalize_angle(std::atan2(w.x2, w.x1) - std::atan2(-c, s));
  return {theta, psi / len, len};
}

double cc_distance(const HPoint& p, const HPoint& q) { return cc_shoot(p, q).length; }

}  // namespace hheat
