#include "hheat/surfgeom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>

#include <Eigen/Geometry>

#include "hheat/errors.hpp"

namespace hheat {

double surface_tol(const ImplicitDomain& dom) { return 1e-10 * dom.bbox().diameter(); }

Vec3 frame_gradient(const ImplicitDomain& dom, const HPoint& p) {
  const Vec3 g = dom.gradient(p);
  return {g[0] - p.x2 * g[2], g[1] + p.x1 * g[2], g[2]};
}

SurfacePoint g1_normal(const ImplicitDomain& dom, const HPoint& p) {
  const Vec3 fg = frame_gradient(dom, p);
  const double len = fg.norm();
  if (!(dom.gradient(p).norm() >= 1e-12) || !(len > 0.0)) {
    throw DegenerateGradient("vanishing gradient at boundary point");
  }
  const Vec3 n = fg / len;
  return {p, FrameVector{n[0], n[1], n[2]}, std::hypot(n[0], n[1])};
}

HPoint project_to_surface(const ImplicitDomain& dom, const HPoint& p, int max_iter) {
  Vec3 x = p.vec();
  const double tol = 1e-3 * surface_tol(dom);
  for (int it = 0; it < max_iter; ++it) {
    const HPoint q = HPoint::from(x);
    const double f = dom.value(q);
    const Vec3 g = dom.gradient(q);
    const double g2 = g.squaredNorm();
    if (!(g2 > 1e-24)) throw DegenerateGradient("vanishing gradient during projection");
    const Vec3 step = f / g2 * g;
    x -= step;
    if (step.norm() <= tol || std::abs(f) == 0.0) {
      return HPoint::from(x);
    }
  }
  const HPoint q = HPoint::from(x);
  if (std::abs(dom.value(q)) > surface_tol(dom)) {
    throw ConvergenceFailure("projection onto the boundary did not converge");
  }
  return q;
}

std::pair<FrameVector, FrameVector> horizontal_frame(const SurfacePoint& sp, double char_tol) {
  if (!(sp.nh_norm > char_tol)) throw CharacteristicPoint("horizontal normal vanishes");
  const double a = sp.n.a / sp.nh_norm;
  const double b = sp.n.b / sp.nh_norm;
  return {FrameVector{-a, -b, 0.0}, FrameVector{-b, a, 0.0}};
}

double normal_curvature_lambda(const SurfacePoint& sp, double char_tol) {
  if (!(sp.nh_norm > char_tol)) throw CharacteristicPoint("horizontal normal vanishes");
  return 2.0 * sp.n.c / sp.nh_norm;
}

double horizontal_mean_curvature(const ImplicitDomain& dom, const SurfacePoint& sp,
                                 double char_tol) {
  if (!(sp.nh_norm > char_tol)) throw CharacteristicPoint("horizontal normal vanishes");
  const HPoint& x = sp.p;
  const Vec3 g = dom.gradient(x);
  const Mat3 h = dom.hessian(x);
  const double p = g[0] - x.x2 * g[2];
  const double q = g[1] + x.x1 * g[2];
  const double x1p = h(0, 0) - 2.0 * x.x2 * h(0, 2) + x.x2 * x.x2 * h(2, 2);
  const double x2q = h(1, 1) + 2.0 * x.x1 * h(1, 2) + x.x1 * x.x1 * h(2, 2);
  const double x1q = h(0, 1) + g[2] + x.x1 * h(0, 2) - x.x2 * h(1, 2) - x.x1 * x.x2 * h(2, 2);
  const double x2p = h(0, 1) - g[2] - x.x2 * h(1, 2) + x.x1 * h(0, 2) - x.x1 * x.x2 * h(2, 2);
  const double rho2 = p * p + q * q;
  const double rho = std::sqrt(rho2);
  return (x1p + x2q) / rho - (p * p * x1p + p * q * (x1q + x2p) + q * q * x2q) / (rho2 * rho);
}

namespace {

Vec3 tangent_field(const ImplicitDomain& dom, const Vec3& x, double sign, double char_tol) {
  const HPoint p = HPoint::from(x);
  const SurfacePoint sp = g1_normal(dom, p);
  if (!(sp.nh_norm > char_tol)) throw CharacteristicPoint("Legendrian trace reached a characteristic point");
  const FrameVector t = horizontal_frame(sp, char_tol).second;
  return sign * t.cartesian(p);
}

}  // namespace

std::vector<SurfacePoint> legendrian_trace(const ImplicitDomain& dom, const SurfacePoint& sp,
                                           double arclength, double step, double char_tol) {
  if (!(step > 0.0)) throw ParameterOutOfRange("trace step must be positive");
  const double sign = arclength < 0.0 ? -1.0 : 1.0;
  const auto n_steps = static_cast<std::size_t>(std::ceil(std::abs(arclength) / step));
  const double h = n_steps == 0 ? 0.0 : std::abs(arclength) / static_cast<double>(n_steps);

  std::vector<SurfacePoint> out;
  out.reserve(n_steps + 1);
  out.push_back(sp);
  Vec3 x = sp.p.vec();
  const double tol = 10.0 * surface_tol(dom);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const Vec3 k1 = tangent_field(dom, x, sign, char_tol);
    const Vec3 k2 = tangent_field(dom, x + 0.5 * h * k1, sign, char_tol);
    const Vec3 k3 = tangent_field(dom, x + 0.5 * h * k2, sign, char_tol);
    const Vec3 k4 = tangent_field(dom, x + h * k3, sign, char_tol);
    const Vec3 guess = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    HPoint proj;
    try {
      proj = project_to_surface(dom, HPoint::from(guess));
    } catch (const Error&) {
      throw StepTooLarge("projection back onto the surface failed");
    }
    if (std::abs(dom.value(proj)) > tol || (proj.vec() - guess).norm() > h) {
      throw StepTooLarge("projection back onto the surface failed");
    }
    x = proj.vec();
    const SurfacePoint next = g1_normal(dom, proj);
    if (!(next.nh_norm > char_tol)) throw CharacteristicPoint("Legendrian trace reached a characteristic point");
    out.push_back(next);
  }
  return out;
}

double planar_curvature(const std::vector<SurfacePoint>& trace, std::size_t i) {
  if (trace.size() < 3) throw ParameterOutOfRange("curvature needs three points");
  i = std::clamp<std::size_t>(i, 1, trace.size() - 2);
  const Eigen::Vector2d a{trace[i - 1].p.x1, trace[i - 1].p.x2};
  const Eigen::Vector2d b{trace[i].p.x1, trace[i].p.x2};
  const Eigen::Vector2d c{trace[i + 1].p.x1, trace[i + 1].p.x2};
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d v = c - b;
  const double cross = u[0] * v[1] - u[1] * v[0];
  return 2.0 * cross / (u.norm() * v.norm() * (c - a).norm());
}

CharacteristicScan characteristic_scan(const ImplicitDomain&, const SurfaceQuadrature& quad,
                                       double char_tol) {
  CharacteristicScan scan;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double nh = quad.nodes[i].sp.nh_norm;
    scan.min_nh_norm = std::min(scan.min_nh_norm, nh);
    if (nh <= char_tol) scan.flagged.push_back(i);
  }
  return scan;
}

double resolved_char_tol(const ImplicitDomain& dom, int level, double char_tol) {
  const Box box = dom.bbox();
  const double cell = box.extent().maxCoeff() / (8.0 * std::ldexp(1.0, level));
  return std::max(char_tol, 4.0 * cell / box.diameter());
}

namespace {

struct Grid {
  Vec3 lo;
  Vec3 h;
  std::array<int, 3> n{};  // cells per axis

  Vec3 vertex(int i, int j, int k) const {
    return {lo[0] + h[0] * i, lo[1] + h[1] * j, lo[2] + h[2] * k};
  }
};

Grid make_grid(const Box& box, int level) {
  const Vec3 ext = box.extent();
  const double longest = ext.maxCoeff();
  const double target = longest / (8.0 * std::ldexp(1.0, level));
  Grid g;
  g.lo = box.lo;
  for (int a = 0; a < 3; ++a) {
    g.n[a] = std::max(2, static_cast<int>(std::ceil(ext[a] / target - 1e-9)));
    g.h[a] = ext[a] / g.n[a];
  }
  return g;
}

// Root of F on the segment [a, b] with F(a) < 0 <= F(b), by Illinois regula falsi.
Vec3 edge_root(const ImplicitDomain& dom, Vec3 a, double fa, Vec3 b, double fb) {
  double ta = 0.0;
  double tb = 1.0;
  const Vec3 d = b - a;
  int side = 0;
  double t = fa / (fa - fb);
  for (int it = 0; it < 30; ++it) {
    t = (ta * fb - tb * fa) / (fb - fa);
    const double ft = dom.value(HPoint::from(a + t * d));
    if (ft == 0.0 || tb - ta < 1e-13) break;
    if (ft < 0.0) {
      ta = t;
      fa = ft;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      tb = t;
      fb = ft;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    if (std::abs(ft) < 1e-15) break;
  }
  return a + t * d;
}

void add_triangle(const ImplicitDomain& dom, const Vec3& a, const Vec3& b, const Vec3& c,
                  std::vector<QuadratureNode>& out) {
  const double area = 0.5 * (b - a).cross(c - a).norm();
  if (!(area > 0.0)) return;
  const HPoint p = project_to_surface(dom, HPoint::from((a + b + c) / 3.0));
  const Vec3 grad = dom.gradient(p);
  const Vec3 fg = frame_gradient(dom, p);
  QuadratureNode node;
  node.sp = g1_normal(dom, p);
  node.weight = area * fg.norm() / grad.norm();
  out.push_back(node);
}

constexpr std::array<std::array<int, 3>, 6> kPermutations{{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

std::vector<QuadratureNode> march(const ImplicitDomain& dom, const Grid& g) {
  const int nx = g.n[0] + 1;
  const int ny = g.n[1] + 1;
  const int nz = g.n[2] + 1;
  std::vector<double> values(static_cast<std::size_t>(nx) * ny * nz);
  auto idx = [&](int i, int j, int k) { return (static_cast<std::size_t>(k) * ny + j) * nx + i; };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) values[idx(i, j, k)] = dom.value(HPoint::from(g.vertex(i, j, k)));

  std::vector<QuadratureNode> out;
  for (int k = 0; k < g.n[2]; ++k) {
    for (int j = 0; j < g.n[1]; ++j) {
      for (int i = 0; i < g.n[0]; ++i) {
        bool any_neg = false;
        bool any_pos = false;
        for (int c = 0; c < 8; ++c) {
          const double v = values[idx(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))];
          (v < 0.0 ? any_neg : any_pos) = true;
        }
        if (!(any_neg && any_pos)) continue;
        for (const auto& perm : kPermutations) {
          std::array<std::array<int, 3>, 4> off{};
          for (int v = 1; v < 4; ++v) {
            off[v] = off[v - 1];
            if (v <= 3) off[v][perm[v - 1]] = 1;
          }
          std::array<Vec3, 4> pos;
          std::array<double, 4> val{};
          for (int v = 0; v < 4; ++v) {
            pos[v] = g.vertex(i + off[v][0], j + off[v][1], k + off[v][2]);
            val[v] = values[idx(i + off[v][0], j + off[v][1], k + off[v][2])];
          }
          std::array<int, 4> neg{};
          std::array<int, 4> pos_ids{};
          int n_neg = 0;
          int n_pos = 0;
          for (int v = 0; v < 4; ++v) {
            if (val[v] < 0.0) neg[n_neg++] = v; else pos_ids[n_pos++] = v;
          }
          if (n_neg == 0 || n_pos == 0) continue;
          auto cross = [&](int a, int b) { return edge_root(dom, pos[a], val[a], pos[b], val[b]); };
          if (n_neg == 1) {
            add_triangle(dom, cross(neg[0], pos_ids[0]), cross(neg[0], pos_ids[1]),
                         cross(neg[0], pos_ids[2]), out);
          } else if (n_neg == 3) {
            add_triangle(dom, cross(neg[0], pos_ids[0]), cross(neg[1], pos_ids[0]),
                         cross(neg[2], pos_ids[0]), out);
          } else {
            const Vec3 p0 = cross(neg[0], pos_ids[0]);
            const Vec3 p1 = cross(neg[0], pos_ids[1]);
            const Vec3 p2 = cross(neg[1], pos_ids[1]);
            const Vec3 p3 = cross(neg[1], pos_ids[0]);
            add_triangle(dom, p0, p1, p2, out);
            add_triangle(dom, p0, p2, p3, out);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

SurfaceQuadrature build_quadrature(const ImplicitDomain& dom, int level) {
  if (level < 0 || level > 8) throw ParameterOutOfRange("quadrature level must be in [0, 8]");
  SurfaceQuadrature q;
  q.level = level;
  q.nodes = march(dom, make_grid(dom.bbox(), level));
  return q;
}

double surface_area(const SurfaceQuadrature& quad) {
  double s = 0.0;
  for (const auto& node : quad.nodes) s += node.weight;
  return s;
}

double horizontal_perimeter(const ImplicitDomain&, const SurfaceQuadrature& quad) {
  double s = 0.0;
  for (const auto& node : quad.nodes) s += node.weight * node.sp.nh_norm;
  return s;
}

double total_mean_curvature(const ImplicitDomain& dom, const SurfaceQuadrature& quad,
                            double char_tol) {
  double s = 0.0;
  for (const auto& node : quad.nodes) {
    s += node.weight * node.sp.nh_norm * horizontal_mean_curvature(dom, node.sp, char_tol);
  }
  return s;
}

namespace {

// Volume of {x in [0,a] : n.x < d}, all n_i > 0.
double box_halfspace_positive(const Vec3& a, const Vec3& n, double d) {
  double sum = 0.0;
  for (int c = 0; c < 8; ++c) {
    double s = d;
    int parity = 0;
    for (int i = 0; i < 3; ++i) {
      if (c >> i & 1) {
        s -= n[i] * a[i];
        ++parity;
      }
    }
    if (s > 0.0) sum += (parity % 2 ? -1.0 : 1.0) * s * s * s;
  }
  return sum / (6.0 * n[0] * n[1] * n[2]);
}

// Volume of {x in box : f0 + g.(x - center) < 0}.
double box_linear_volume(const Vec3& half, double f0, Vec3 g) {
  const Vec3 a = 2.0 * half;
  const double full = a.prod();
  const double floor = 1e-4 * g.norm();
  if (!(floor > 0.0)) return f0 < 0.0 ? full : 0.0;
  // Shift the origin to the low corner: g.x < g.(center) - f0.
  double d = g.dot(half) - f0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(g[i]) < floor) g[i] = std::copysign(floor, g[i] == 0.0 ? 1.0 : g[i]);
    if (g[i] < 0.0) {
      d -= g[i] * a[i];
      g[i] = -g[i];
    }
  }
  return std::clamp(box_halfspace_positive(a, g, d), 0.0, full);
}

}  // namespace

double volume(const ImplicitDomain& dom, int max_depth) {
  const Box box = dom.bbox();
  struct Cell {
    Vec3 center;
    int depth;
  };
  const Vec3 root_half = 0.5 * box.extent();
  std::vector<Cell> stack{{0.5 * (box.lo + box.hi), 0}};
  double total = 0.0;
  while (!stack.empty()) {
    const Cell cell = stack.back();
    stack.pop_back();
    const Vec3 half = std::ldexp(1.0, -cell.depth) * root_half;
    const HPoint c = HPoint::from(cell.center);
    const double f = dom.value(c);
    const Vec3 g = dom.gradient(c);
    const double rho = half.norm();
    const double hn = dom.hessian(c).norm();
    if (std::abs(f) > 1.5 * (g.norm() * rho + 0.5 * hn * rho * rho)) {
      if (f < 0.0) total += 8.0 * half.prod();
      continue;
    }
    if (cell.depth >= max_depth) {
      total += box_linear_volume(half, f, g);
      continue;
    }
    for (int o = 0; o < 8; ++o) {
      const Vec3 shift{(o & 1) ? 0.5 : -0.5, (o & 2) ? 0.5 : -0.5, (o & 4) ? 0.5 : -0.5};
      stack.push_back({cell.center + shift.cwiseProduct(half), cell.depth + 1});
    }
  }
  return total;
}

Extrapolated volume_extrapolated(const ImplicitDomain& dom, int max_depth) {
  const double coarse = volume(dom, max_depth);
  const double fine = volume(dom, max_depth + 1);
  return {(4.0 * fine - coarse) / 3.0, std::abs(fine - coarse) / 3.0};
}

BoundaryIntegrals boundary_integrals(const ImplicitDomain& dom, int level, double char_tol) {
  const SurfaceQuadrature coarse = build_quadrature(dom, level);
  const SurfaceQuadrature fine = build_quadrature(dom, level + 1);
  auto extrapolate = [](double c, double f) {
    return Extrapolated{(4.0 * f - c) / 3.0, std::abs(f - c) / 3.0};
  };
  BoundaryIntegrals out;
  out.sigma = extrapolate(surface_area(coarse), surface_area(fine));
  out.sigma0 = extrapolate(horizontal_perimeter(dom, coarse), horizontal_perimeter(dom, fine));
  out.mean_curvature = extrapolate(total_mean_curvature(dom, coarse, char_tol),
                                   total_mean_curvature(dom, fine, char_tol));
  return out;
}

SurfaceQuadrature coarsen(const ImplicitDomain& dom, const SurfaceQuadrature& quad,
                          std::size_t target_count) {
  if (target_count == 0 || quad.nodes.size() <= target_count) return quad;
  const Box box = dom.bbox();
  const double area = std::max(surface_area(quad), 1e-300);

  auto bin = [&](double side) {
    std::map<std::tuple<long, long, long>, std::vector<std::size_t>> bins;
    for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
      const Vec3 rel = (quad.nodes[i].sp.p.vec() - box.lo) / side;
      bins[{static_cast<long>(std::floor(rel[0])), static_cast<long>(std::floor(rel[1])),
            static_cast<long>(std::floor(rel[2]))}]
          .push_back(i);
    }
    return bins;
  };

  // Pick the bin size whose patch count lands closest to the target.
  const double side0 = std::sqrt(area / static_cast<double>(target_count));
  auto bins = bin(side0);
  std::size_t best_miss = SIZE_MAX;
  for (int k = -24; k <= 24; ++k) {
    auto trial = bin(side0 * std::exp2(k / 16.0));
    const std::size_t miss = trial.size() > target_count ? trial.size() - target_count
                                                         : target_count - trial.size();
    if (miss < best_miss) {
      best_miss = miss;
      bins = std::move(trial);
    }
  }

  SurfaceQuadrature out;
  out.level = quad.level;
  out.est_error = quad.est_error;
  for (const auto& [key, members] : bins) {
    double w = 0.0;
    double w0 = 0.0;
    Vec3 centroid = Vec3::Zero();
    for (std::size_t i : members) {
      const auto& node = quad.nodes[i];
      w += node.weight;
      w0 += node.weight * node.sp.nh_norm;
      centroid += node.weight * node.sp.p.vec();
    }
    centroid /= w;
    // Representative: the member closest to the weighted centroid.
    std::size_t best = members.front();
    double best_d = INFINITY;
    for (std::size_t i : members) {
      const double d = (quad.nodes[i].sp.p.vec() - centroid).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    QuadratureNode node;
    node.sp = quad.nodes[best].sp;
    node.weight = node.sp.nh_norm > 0.0 ? w0 / node.sp.nh_norm : w;
    out.nodes.push_back(node);
  }
  return out;
}

}  // namespace hheat
