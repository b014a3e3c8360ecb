#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hheat/errors.hpp"
#include "hheat/surfgeom.hpp"

using namespace hheat;

namespace {

constexpr double kPi = std::numbers::pi;

// A tilted, wavy noncharacteristic cylinder: x1^2 + x2^2 (1 + a x1) - R^2 + b sin(x3).
class WavyDomain final : public ImplicitDomain {
 public:
  double value(const HPoint& p) const override {
    return p.x1 * p.x1 + p.x2 * p.x2 * (1 + 0.2 * p.x1) - 1.0 + 0.1 * std::sin(2 * kPi * p.x3) * p.x1;
  }
  Vec3 gradient(const HPoint& p) const override {
    const double s = std::sin(2 * kPi * p.x3), c = std::cos(2 * kPi * p.x3);
    return {2 * p.x1 + 0.2 * p.x2 * p.x2 + 0.1 * s, 2 * p.x2 * (1 + 0.2 * p.x1),
            0.2 * kPi * c * p.x1};
  }
  Mat3 hessian(const HPoint& p) const override {
    const double s = std::sin(2 * kPi * p.x3), c = std::cos(2 * kPi * p.x3);
    Mat3 h;
    h << 2, 0.4 * p.x2, 0.2 * kPi * c,  //
        0.4 * p.x2, 2 * (1 + 0.2 * p.x1), 0,  //
        0.2 * kPi * c, 0, -0.4 * kPi * kPi * s * p.x1;
    return h;
  }
  Box bbox() const override { return {Vec3{-1.3, -1.3, 0}, Vec3{1.3, 1.3, 1}}; }
  std::string name() const override { return "wavy"; }
  Vec3 periods() const override { return {0, 0, 1}; }
};

// Hessian-free check of H: divergence of the normalized horizontal normal by finite differences.
double fd_mean_curvature(const ImplicitDomain& dom, const HPoint& p) {
  auto field = [&](const HPoint& q) {
    const Vec3 fg = frame_gradient(dom, q);
    return Eigen::Vector2d(fg[0], fg[1]).normalized();
  };
  const double h = 1e-5;
  const auto fr = frame_at(p);
  auto shifted = [&](const Vec3& d, double s) { return HPoint::from(p.vec() + s * d); };
  const double d1 = (field(shifted(fr[0], h))[0] - field(shifted(fr[0], -h))[0]) / (2 * h);
  const double d2 = (field(shifted(fr[1], h))[1] - field(shifted(fr[1], -h))[1]) / (2 * h);
  return d1 + d2;
}

}  // namespace

TEST_CASE("normals") {
  CylinderDomain cyl(1.0, 1.0);
  const SurfacePoint sp = g1_normal(cyl, HPoint{1, 0, 0});
  CHECK(sp.n.a == doctest::Approx(1));
  CHECK(sp.n.b == doctest::Approx(0));
  CHECK(sp.n.c == doctest::Approx(0));
  CHECK(sp.nh_norm == doctest::Approx(1));

  KoranyiBallDomain ball(1.0);
  const SurfacePoint pole = g1_normal(ball, HPoint{0, 0, 0.5});
  CHECK(pole.nh_norm == 0.0);
  CHECK_THROWS_AS(horizontal_frame(pole), CharacteristicPoint);
  CHECK_THROWS_AS(g1_normal(cyl, HPoint{0, 0, 0}), DegenerateGradient);

  WavyDomain wavy;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const HPoint p = project_to_surface(wavy, HPoint{u(rng), u(rng), 0.5 + 0.5 * u(rng)});
    const SurfacePoint s = g1_normal(wavy, p);
    CHECK(std::abs(s.n.a * s.n.a + s.n.b * s.n.b + s.n.c * s.n.c - 1) < 1e-10);
    const Vec3 out = s.n.cartesian(p);
    CHECK(wavy.value(HPoint::from(p.vec() + 1e-6 * out)) > 0);
    const auto [n, t] = horizontal_frame(s);
    CHECK(std::abs(g1_inner(n, t)) < 1e-12);
    CHECK(std::abs(n.g0_norm() - 1) < 1e-12);
    CHECK(std::abs(t.g0_norm() - 1) < 1e-12);
    CHECK(std::abs(wavy.gradient(p).dot(t.cartesian(p))) < 1e-10);
  }
}

TEST_CASE("frame under cylinder example") {
  CylinderDomain cyl(1.0, 1.0);
  const auto [n, t] = horizontal_frame(g1_normal(cyl, HPoint{1, 0, 0}));
  CHECK(n.a == doctest::Approx(-1));
  CHECK(n.b == doctest::Approx(0));
  CHECK(t.a == doctest::Approx(0));
  CHECK(t.b == doctest::Approx(1));
}

TEST_CASE("normal under left translation") {
  auto cyl = std::make_shared<CylinderDomain>(1.0, 1.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const HPoint g{u(rng), u(rng), u(rng)};
    TranslatedDomain moved(cyl, g);
    const double phi = u(rng);
    const HPoint p{std::cos(phi), std::sin(phi), u(rng)};
    const SurfacePoint a = g1_normal(*cyl, p);
    const SurfacePoint b = g1_normal(moved, group_mul(g, p));
    CHECK(std::abs(a.n.a - b.n.a) < 1e-9);
    CHECK(std::abs(a.n.b - b.n.b) < 1e-9);
    CHECK(std::abs(a.n.c - b.n.c) < 1e-9);
    CHECK(horizontal_mean_curvature(moved, b) == doctest::Approx(1.0));
  }
}

TEST_CASE("lambda from the normal") {
  SurfacePoint sp;
  sp.n = {0, 1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
  sp.nh_norm = 1 / std::sqrt(2.0);
  CHECK(normal_curvature_lambda(sp) == doctest::Approx(2));
  sp.n.c = -sp.n.c;
  CHECK(normal_curvature_lambda(sp) == doctest::Approx(-2));
  CylinderDomain cyl(1.0, 1.0);
  CHECK(normal_curvature_lambda(g1_normal(cyl, HPoint{0, 1, 3})) == 0.0);
}

TEST_CASE("mean curvature closed form") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (double r : {0.5, 1.0, 2.0}) {
    CylinderDomain cyl(r, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const double a = u(rng);
      const SurfacePoint sp = g1_normal(cyl, HPoint{r * std::cos(a), r * std::sin(a), u(rng)});
      CHECK(std::abs(horizontal_mean_curvature(cyl, sp) - 1 / r) <= 1e-8);
    }
  }
  HalfSpaceDomain plane(0.3);
  CHECK(horizontal_mean_curvature(plane, g1_normal(plane, HPoint{0.3, 1, 2})) == 0.0);

  WavyDomain wavy;
  std::uniform_real_distribution<double> v(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const HPoint p = project_to_surface(wavy, HPoint{v(rng), v(rng), 0.5 + 0.5 * v(rng)});
    const SurfacePoint sp = g1_normal(wavy, p);
    CHECK(horizontal_mean_curvature(wavy, sp) == doctest::Approx(fd_mean_curvature(wavy, p)).epsilon(1e-6));
  }
}

TEST_CASE("Legendrian trace") {
  CylinderDomain cyl(1.0, 1.0);
  const SurfacePoint start = g1_normal(cyl, HPoint{1, 0, 0.2});
  const auto fwd = legendrian_trace(cyl, start, 1.0, 1e-2);
  for (const auto& s : fwd) {
    CHECK(std::hypot(s.p.x1, s.p.x2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(cyl.value(s.p)) <= 10 * surface_tol(cyl));
  }
  const auto back = legendrian_trace(cyl, fwd.back(), -1.0, 1e-2);
  CHECK((back.back().p.vec() - start.p.vec()).norm() < 1e-8);

  WavyDomain wavy;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(-1, 1);
  for (int i = 0; i < 20; ++i) {
    const HPoint p = project_to_surface(wavy, HPoint{v(rng), v(rng), 0.5 + 0.5 * v(rng)});
    const SurfacePoint sp = g1_normal(wavy, p);
    const double h = 2e-3;
    auto f = legendrian_trace(wavy, sp, 2 * h, h);
    auto b = legendrian_trace(wavy, sp, -2 * h, h);
    std::vector<SurfacePoint> line{b[1], sp, f[1]};
    CHECK(std::abs(planar_curvature(line, 1) - horizontal_mean_curvature(wavy, sp)) < 1e-4);
  }
}

TEST_CASE("cylinder boundary integrals") {
  CylinderDomain cyl(1.0, 1.0);
  for (int level = 0; level <= 3; ++level) {
    const SurfaceQuadrature q = build_quadrature(cyl, level);
    const CharacteristicScan scan = characteristic_scan(cyl, q, 1e-6);
    CHECK(scan.flagged.empty());
    CHECK(scan.min_nh_norm == doctest::Approx(1.0));
    CHECK(horizontal_perimeter(cyl, q) <= surface_area(q) + 1e-12);
  }
  const BoundaryIntegrals bi = boundary_integrals(cyl, 3);
  MESSAGE("sigma0 " << bi.sigma0.value << " +- " << bi.sigma0.est_error);
  CHECK(bi.sigma0.value == doctest::Approx(2 * kPi).epsilon(1e-4));
  CHECK(bi.mean_curvature.value == doctest::Approx(2 * kPi).epsilon(1e-4));

  CylinderDomain wide(2.0, 1.0);
  const BoundaryIntegrals w = boundary_integrals(wide, 3);
  CHECK(w.sigma0.value == doctest::Approx(4 * kPi).epsilon(1e-4));
  CHECK(w.mean_curvature.value == doctest::Approx(2 * kPi).epsilon(1e-4));

  auto base = std::make_shared<CylinderDomain>(1.0, 1.0);
  DilatedDomain big(base, 2.0);
  const BoundaryIntegrals d = boundary_integrals(big, 3);
  CHECK(d.sigma0.value == doctest::Approx(8 * bi.sigma0.value).epsilon(1e-4));
}

TEST_CASE("quadrature converges at second order") {
  CylinderDomain cyl(1.0, 1.0);
  const double limit = horizontal_perimeter(cyl, build_quadrature(cyl, 5));
  double prev = NAN;
  for (int level = 1; level <= 3; ++level) {
    const double err = std::abs(horizontal_perimeter(cyl, build_quadrature(cyl, level)) - 2 * kPi);
    MESSAGE("level " << level << " error " << err << " vs limit " << limit - 2 * kPi);
    if (!std::isnan(prev)) CHECK(prev / err >= 3.0);
    prev = err;
  }
}

TEST_CASE("characteristic scan on the Koranyi ball") {
  KoranyiBallDomain ball(1.0);
  const SurfaceQuadrature q = build_quadrature(ball, 2);
  const CharacteristicScan scan = characteristic_scan(ball, q, 0.05);
  REQUIRE(!scan.flagged.empty());
  for (std::size_t i : scan.flagged) {
    const HPoint& p = q.nodes[i].sp.p;
    CHECK(std::hypot(p.x1, p.x2) < 0.3);
    CHECK(std::abs(std::abs(p.x3) - 0.5) < 0.05);
  }
  CHECK(scan.min_nh_norm < 0.05);
}

TEST_CASE("volume") {
  CylinderDomain cyl(1.0, 1.0);
  const Extrapolated v = volume_extrapolated(cyl, 7);
  MESSAGE("cylinder volume " << v.value << " +- " << v.est_error);
  CHECK(v.value == doctest::Approx(kPi).epsilon(1e-5));
  auto base = std::make_shared<CylinderDomain>(1.0, 1.0);
  DilatedDomain big(base, 2.0);
  CHECK(volume_extrapolated(big, 7).value == doctest::Approx(16 * kPi).epsilon(1e-5));
  KoranyiBallDomain ball(1.0);
  // Exact: integral over the disk of rho^2 -> sqrt(1 - rho^4), in polar form pi * pi/4 ... computed
  // as 2 pi int_0^1 sqrt(1 - r^4) r dr = pi int_0^1 sqrt(1 - s^2) ds = pi^2/4.
  CHECK(volume_extrapolated(ball, 7).value == doctest::Approx(kPi * kPi / 4).epsilon(1e-3));

  class Empty final : public ImplicitDomain {
   public:
    double value(const HPoint&) const override { return 1.0; }
    Vec3 gradient(const HPoint&) const override { return Vec3::Zero(); }
    Mat3 hessian(const HPoint&) const override { return Mat3::Zero(); }
    Box bbox() const override { return {Vec3::Zero(), Vec3::Ones()}; }
    std::string name() const override { return "empty"; }
  };
  CHECK(volume(Empty{}) == 0.0);
}

TEST_CASE("coarsening keeps the horizontal perimeter") {
  CylinderDomain cyl(1.0, 1.0);
  const SurfaceQuadrature q = build_quadrature(cyl, 2);
  const SurfaceQuadrature c = coarsen(cyl, q, 8);
  CHECK(c.nodes.size() >= 5);
  CHECK(c.nodes.size() <= 12);
  CHECK(horizontal_perimeter(cyl, c) == doctest::Approx(horizontal_perimeter(cyl, q)).epsilon(1e-12));
}
