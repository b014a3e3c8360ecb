#include "hheat/tubechart.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/tools/roots.hpp>

#include "hheat/errors.hpp"

namespace hheat {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kSmall = 1e-3;

// (e^a - 1)/a
cplx expm1_ratio(cplx a) {
  if (std::abs(a) < kSmall) return 1.0 + a * (0.5 + a * (1.0 / 6.0 + a * (1.0 / 24.0 + a / 120.0)));
  const double ar = a.real();
  const double b = a.imag();
  const double sh = std::sin(0.5 * b);
  const cplx em1{std::expm1(ar) * std::cos(b) - 2.0 * sh * sh, std::exp(ar) * std::sin(b)};
  return em1 / a;
}

// log(1 + w)/w on the principal branch.
cplx log1p_ratio(cplx w) {
  if (std::abs(w) < kSmall) {
    return 1.0 + w * (-0.5 + w * (1.0 / 3.0 + w * (-0.25 + w * 0.2)));
  }
  const double re = 0.5 * std::log1p(2.0 * w.real() + std::norm(w));
  const double im = std::atan2(w.imag(), 1.0 + w.real());
  return cplx{re, im} / w;
}

// (e^{2u} - 1)/(2u)
double e_ratio(double u) {
  if (std::abs(u) < kSmall) return 1.0 + u * (1.0 + u * (2.0 / 3.0 + u * (1.0 / 3.0 + u * 2.0 / 15.0)));
  return std::expm1(2.0 * u) / (2.0 * u);
}

// xi * (e^u sinc(v) - E(u)) / lambda with u = lambda y, v = lambda xi.
double xi_drift(double lambda, double xi, double y) {
  const double u = lambda * y;
  const double v = lambda * xi;
  if (std::max(std::abs(u), std::abs(v)) < kSmall) {
    const double y2 = y * y;
    const double x2 = xi * xi;
    const double series = -y2 / 6.0 - lambda * y * y2 / 6.0 - 11.0 * lambda * lambda * y2 * y2 / 120.0 -
                          x2 / 6.0 - lambda * y * x2 / 6.0 - lambda * lambda * y2 * x2 / 12.0 +
                          lambda * lambda * x2 * x2 / 120.0;
    return xi * lambda * series;
  }
  return xi * (std::exp(u) * detail::sinc(v) - e_ratio(u)) / lambda;
}

HPoint chart_offset(const GeodesicChart& chart, const ChartCoords& c) {
  const cplx w{c.xi, c.y};
  const cplx rot = std::polar(1.0, chart.theta);
  const cplx planar = rot * w * expm1_ratio(cplx{0.0, -chart.lambda} * w);
  const double third = c.z * e_ratio(chart.lambda * c.y) + xi_drift(chart.lambda, c.xi, c.y);
  return {planar.real(), planar.imag(), third};
}

}  // namespace

ChartBox default_chart_box(double lambda, double r) {
  const double al = std::abs(lambda);
  double w = r + 0.5 / std::max(al, 1.0);
  if (al > 0.0) w = std::min(w, kPi / (2.0 * al));
  return {w, w, 0.25};
}

GeodesicChart make_chart(const HPoint& base, double theta, double lambda, double r) {
  return {base, normalize_angle(theta), lambda, r, default_chart_box(lambda, r)};
}

HPoint tube_point(const SurfacePoint& s, double r, double char_tol) {
  const auto [n, t] = horizontal_frame(s, char_tol);
  const double lambda = normal_curvature_lambda(s, char_tol);
  return cc_geodesic({s.p, std::atan2(n.b, n.a), lambda}, r);
}

GeodesicChart chart_from_boundary(const SurfacePoint& s, double r, double char_tol) {
  const double lambda = -normal_curvature_lambda(s, char_tol);
  const HPoint x = tube_point(s, r, char_tol);
  const double theta = std::atan2(s.n.b, s.n.a) + lambda * r;
  return make_chart(x, theta, lambda, r);
}

HPoint phi_unchecked(const GeodesicChart& chart, const ChartCoords& c) {
  return group_mul(chart.base, chart_offset(chart, c));
}

HPoint phi(const GeodesicChart& chart, const ChartCoords& c) {
  if (!chart.box.contains(c)) throw OutOfChart("chart coordinates outside the certified box");
  return phi_unchecked(chart, c);
}

ChartCoords phi_inverse(const GeodesicChart& chart, const HPoint& q) {
  const HPoint d = group_mul(group_inv(chart.base), q);
  const cplx zeta = cplx{d.x1, d.x2} * std::polar(1.0, -chart.theta);
  const cplx omega = cplx{0.0, -chart.lambda} * zeta;
  const cplx one_plus = 1.0 + omega;
  if (one_plus.real() <= 0.0 && std::abs(one_plus.imag()) <= 1e-14 * (1.0 + std::abs(omega))) {
    throw OutOfChart("point outside the principal branch of the chart inverse");
  }
  const cplx w = zeta * log1p_ratio(omega);
  ChartCoords c{w.real(), w.imag(), 0.0};
  c.z = (d.x3 - xi_drift(chart.lambda, c.xi, c.y)) / e_ratio(chart.lambda * c.y);
  if (!chart.box.contains(c)) throw OutOfChart("preimage outside the certified box");
  const Vec3 residual = phi_unchecked(chart, c).vec() - q.vec();
  if (residual.norm() > 1e-9 * (1.0 + q.vec().norm())) {
    throw OutOfChart("chart inverse residual too large");
  }
  return c;
}

double phi_jacobian_det(double lambda, double y) {
  const double u = lambda * y;
  return std::exp(2.0 * u) * e_ratio(u);
}

double homogeneous_norm(const ChartCoords& c) {
  return std::sqrt(c.xi * c.xi + c.y * c.y + std::abs(c.z));
}

double comparability_ratio(const GeodesicChart& chart, const ChartCoords& c) {
  const double h = homogeneous_norm(c);
  if (!(h > 0.0)) throw ParameterOutOfRange("comparability ratio at the chart origin");
  return koranyi_norm(group_mul(group_inv(chart.base), phi(chart, c))) / h;
}

double expansion_ratio(const GeodesicChart& chart, const ChartCoords& c) {
  const double s = c.xi * c.xi + c.y * c.y;
  const double g = std::pow(s * s + 4.0 * c.z * c.z, 0.25);
  if (!(g > 0.0)) throw ParameterOutOfRange("expansion ratio at the chart origin");
  return koranyi_norm(group_mul(group_inv(chart.base), phi(chart, c))) / g;
}

namespace {

struct FrameCoefficients {
  double alpha;  // cos theta + lambda (q2 - x2)
  double beta;   // sin theta - lambda (q1 - x1)
};

FrameCoefficients frame_coefficients(const GeodesicChart& chart, const HPoint& q) {
  return {std::cos(chart.theta) + chart.lambda * (q.x2 - chart.base.x2),
          std::sin(chart.theta) - chart.lambda * (q.x1 - chart.base.x1)};
}

}  // namespace

double chart_frame_f(const GeodesicChart& chart, const HPoint& q) {
  const auto [a, b] = frame_coefficients(chart, q);
  return a * a + b * b;
}

std::array<Vec3, 3> chart_frame(const GeodesicChart& chart, const HPoint& q) {
  const auto [a, b] = frame_coefficients(chart, q);
  const auto x = frame_at(q);
  return {-a * x[0] - b * x[1], -b * x[0] + a * x[1], (a * a + b * b) * x[2]};
}

double boundary_graph_h(const ImplicitDomain& dom, const GeodesicChart& chart, double y, double z) {
  auto g = [&](double xi) { return dom.value(phi(chart, {xi, y, z})); };
  const double width = 2.0 * (std::abs(y) + std::abs(z)) + 1e-4;
  const double lo = std::max(chart.r - width, -chart.box.xi_max);
  const double hi = std::min(chart.r + width, chart.box.xi_max);
  constexpr int kSamples = 16;
  std::array<double, kSamples + 1> xs{};
  std::array<double, kSamples + 1> fs{};
  for (int k = 0; k <= kSamples; ++k) {
    xs[k] = lo + (hi - lo) * k / kSamples;
    fs[k] = g(xs[k]);
  }
  int changes = 0;
  int at = -1;
  for (int k = 0; k < kSamples; ++k) {
    if ((fs[k] < 0.0) != (fs[k + 1] < 0.0)) {
      ++changes;
      at = k;
    }
  }
  if (changes == 0) throw NoRoot("boundary graph root not bracketed");
  if (changes > 1) throw MultipleRoots("boundary crossed more than once along the chart axis");
  if (fs[at] == 0.0) return chart.r - xs[at];
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      g, xs[at], xs[at + 1], fs[at], fs[at + 1], boost::math::tools::eps_tolerance<double>(52), iters);
  return chart.r - 0.5 * (a + b);
}

HExpansion h_expansion(const ImplicitDomain& dom, const GeodesicChart& chart) {
  constexpr double kStep = 1e-3;
  auto h = [&](double y, double z) { return boundary_graph_h(dom, chart, y, z); };
  const double h0 = h(0.0, 0.0);
  auto second = [&](double d) { return (h(d, 0.0) - 2.0 * h0 + h(-d, 0.0)) / (d * d); };
  auto first_z = [&](double d) { return (h(0.0, d) - h(0.0, -d)) / (2.0 * d); };
  HExpansion out;
  out.half_H = 0.5 * (4.0 * second(0.5 * kStep) - second(kStep)) / 3.0;
  out.k1 = (4.0 * first_z(0.5 * kStep) - first_z(kStep)) / 3.0;

  constexpr double kDelta = 0.02;
  for (double ys : {-4.0, -2.0, -1.0, 1.0, 2.0, 4.0}) {
    for (double zs : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
      const double y = ys * kDelta;
      const double z = zs * kDelta * kDelta;
      const double resid = h(y, z) - out.half_H * y * y - out.k1 * z;
      out.cubic_bound = std::max(out.cubic_bound, std::abs(resid) / (std::abs(y * y * y) + std::abs(y * z)));
    }
  }
  return out;
}

HPoint tube_point_psi(const ImplicitDomain& dom, const SurfacePoint& s, double r) {
  if (r < 0.0) throw ParameterOutOfRange("tube parameter must be nonnegative");
  const HPoint x = tube_point(s, r);
  if (r == 0.0) return x;
  const double lambda = normal_curvature_lambda(s);
  if (std::abs(lambda) * r >= 2.0 * kPi) throw ReachExceeded("tube parameter beyond the geodesic's range");
  const double d = cc_distance(x, s.p);
  if (std::abs(d - r) > 1e-6) throw ReachExceeded("tube point is not at distance r from s");
  for (int k = 1; k <= 8; ++k) {
    if (!(dom.value(tube_point(s, r * k / 8.0)) < 0.0)) {
      throw ReachExceeded("normal geodesic leaves the domain before r");
    }
  }
  return x;
}

double tube_jacobian(const ImplicitDomain& dom, const SurfacePoint& s, double r) {
  const Vec3 grad = dom.gradient(s.p);
  const Vec3 n = grad.normalized();
  Vec3 u = (std::abs(n[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
  u = (u - u.dot(n) * n).normalized();
  const Vec3 v = n.cross(u);
  const double scale = std::max(1.0, s.p.vec().norm());
  const double h = 1e-5 * scale;
  const double hr = 1e-5 * std::max(1.0, r);

  auto psi = [&](double a, double b, double rr) {
    const HPoint moved = project_to_surface(dom, HPoint::from(s.p.vec() + a * u + b * v));
    return tube_point(g1_normal(dom, moved), rr).vec();
  };
  Mat3 jac;
  jac.col(0) = (psi(h, 0, r) - psi(-h, 0, r)) / (2.0 * h);
  jac.col(1) = (psi(0, h, r) - psi(0, -h, r)) / (2.0 * h);
  if (r >= hr) {
    jac.col(2) = (psi(0, 0, r + hr) - psi(0, 0, r - hr)) / (2.0 * hr);
  } else {
    jac.col(2) = (psi(0, 0, r + hr) - psi(0, 0, r)) / hr;
  }
  const double sigma0_density = std::hypot(frame_gradient(dom, s.p)[0], frame_gradient(dom, s.p)[1]) / grad.norm();
  if (!(sigma0_density > 0.0)) throw CharacteristicPoint("horizontal normal vanishes");
  return std::abs(jac.determinant()) / sigma0_density;
}

bool nearest_point_holds(const ImplicitDomain& dom, const SurfaceQuadrature& quad,
                         const SurfacePoint& s, double r) {
  HPoint x;
  try {
    x = tube_point_psi(dom, s, r);
  } catch (const ReachExceeded&) {
    return false;
  }
  const double floor = r * (1.0 - 1e-6) - 1e-9;
  for (const auto& node : quad.nodes) {
    // The planar projection is 1-Lipschitz, so this skips most shooting solves.
    if (std::hypot(node.sp.p.x1 - x.x1, node.sp.p.x2 - x.x2) >= floor) continue;
    if (cc_distance(x, node.sp.p) < floor) return false;
  }
  return true;
}

double reach_probe(const ImplicitDomain& dom, const SurfaceQuadrature& quad, double r_max,
                   std::size_t n_samples) {
  if (quad.nodes.empty()) throw ParameterOutOfRange("reach probe needs quadrature nodes");
  const std::size_t stride = std::max<std::size_t>(1, quad.nodes.size() / n_samples);
  auto holds = [&](double r) {
    for (std::size_t i = 0; i < quad.nodes.size(); i += stride) {
      if (!nearest_point_holds(dom, quad, quad.nodes[i].sp, r)) return false;
    }
    return true;
  };
  if (holds(r_max)) return r_max;
  double lo = 0.0;
  double hi = r_max;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    (holds(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace hheat
