#include "hheat/domain.hpp"

#include <cmath>

#include "hheat/errors.hpp"

namespace hheat {

CylinderDomain::CylinderDomain(double radius, double z_period) : radius_(radius), period_(z_period) {
  if (!(radius > 0.0) || !(z_period > 0.0)) throw ParameterOutOfRange("cylinder needs R > 0 and z_period > 0");
}

double CylinderDomain::value(const HPoint& p) const {
  return p.x1 * p.x1 + p.x2 * p.x2 - radius_ * radius_;
}

Vec3 CylinderDomain::gradient(const HPoint& p) const { return {2.0 * p.x1, 2.0 * p.x2, 0.0}; }

Mat3 CylinderDomain::hessian(const HPoint&) const {
  Mat3 h = Mat3::Zero();
  h(0, 0) = 2.0;
  h(1, 1) = 2.0;
  return h;
}

Box CylinderDomain::bbox() const {
  const double pad = 1.02 * radius_;
  return {Vec3{-pad, -pad, 0.0}, Vec3{pad, pad, period_}};
}

SlabDomain::SlabDomain(double half_width) : c_(half_width) {
  if (!(half_width > 0.0)) throw ParameterOutOfRange("slab needs c > 0");
}

double SlabDomain::value(const HPoint& p) const { return p.x1 * p.x1 - c_ * c_; }

Vec3 SlabDomain::gradient(const HPoint& p) const { return {2.0 * p.x1, 0.0, 0.0}; }

Mat3 SlabDomain::hessian(const HPoint&) const {
  Mat3 h = Mat3::Zero();
  h(0, 0) = 2.0;
  return h;
}

Box SlabDomain::bbox() const {
  const double pad = 1.02 * c_;
  return {Vec3{-pad, 0.0, 0.0}, Vec3{pad, 1.0, 1.0}};
}

HalfSpaceDomain::HalfSpaceDomain(double c) : c_(c) {}

Box HalfSpaceDomain::bbox() const { return {Vec3{c_ - 1.0, 0.0, 0.0}, Vec3{c_ + 0.02, 1.0, 1.0}}; }

KoranyiBallDomain::KoranyiBallDomain(double r) : r_(r) {
  if (!(r > 0.0)) throw ParameterOutOfRange("koranyi ball needs r > 0");
}

double KoranyiBallDomain::value(const HPoint& p) const {
  const double s = p.x1 * p.x1 + p.x2 * p.x2;
  return s * s + 4.0 * p.x3 * p.x3 - std::pow(r_, 4);
}

Vec3 KoranyiBallDomain::gradient(const HPoint& p) const {
  const double s = p.x1 * p.x1 + p.x2 * p.x2;
  return {4.0 * s * p.x1, 4.0 * s * p.x2, 8.0 * p.x3};
}

Mat3 KoranyiBallDomain::hessian(const HPoint& p) const {
  const double s = p.x1 * p.x1 + p.x2 * p.x2;
  Mat3 h = Mat3::Zero();
  h(0, 0) = 4.0 * s + 8.0 * p.x1 * p.x1;
  h(1, 1) = 4.0 * s + 8.0 * p.x2 * p.x2;
  h(0, 1) = h(1, 0) = 8.0 * p.x1 * p.x2;
  h(2, 2) = 8.0;
  return h;
}

Box KoranyiBallDomain::bbox() const {
  const double a = 1.05 * r_;
  const double b = 0.55 * r_ * r_;
  return {Vec3{-a, -a, -b}, Vec3{a, a, b}};
}

TranslatedDomain::TranslatedDomain(DomainPtr inner, const HPoint& g) : inner_(std::move(inner)), g_(g) {
  // g^{-1} * p = (p1 - g1, p2 - g2, p3 - g3 - g1 p2 + g2 p1)
  m_ = Mat3::Identity();
  m_(2, 0) = g.x2;
  m_(2, 1) = -g.x1;
}

double TranslatedDomain::value(const HPoint& p) const { return inner_->value(pull(p)); }

Vec3 TranslatedDomain::gradient(const HPoint& p) const {
  return m_.transpose() * inner_->gradient(pull(p));
}

Mat3 TranslatedDomain::hessian(const HPoint& p) const {
  return m_.transpose() * inner_->hessian(pull(p)) * m_;
}

Box TranslatedDomain::bbox() const {
  const Box b = inner_->bbox();
  Box out{Vec3::Constant(INFINITY), Vec3::Constant(-INFINITY)};
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 v{(corner & 1) ? b.hi[0] : b.lo[0], (corner & 2) ? b.hi[1] : b.lo[1],
                 (corner & 4) ? b.hi[2] : b.lo[2]};
    const Vec3 w = group_mul(g_, HPoint::from(v)).vec();
    out.lo = out.lo.cwiseMin(w);
    out.hi = out.hi.cwiseMax(w);
  }
  // A periodic axis keeps one full cell of the image.
  const Vec3 per = inner_->periods();
  for (int i = 0; i < 3; ++i) {
    if (per[i] > 0.0) out.hi[i] = out.lo[i] + per[i];
  }
  return out;
}

DilatedDomain::DilatedDomain(DomainPtr inner, double r) : inner_(std::move(inner)), r_(r) {
  if (!(r > 0.0)) throw ParameterOutOfRange("dilation needs r > 0");
  scale_ = {1.0 / r, 1.0 / r, 1.0 / (r * r)};
}

double DilatedDomain::value(const HPoint& p) const { return inner_->value(dilate(p, 1.0 / r_)); }

Vec3 DilatedDomain::gradient(const HPoint& p) const {
  return scale_.asDiagonal() * inner_->gradient(dilate(p, 1.0 / r_));
}

Mat3 DilatedDomain::hessian(const HPoint& p) const {
  return scale_.asDiagonal() * inner_->hessian(dilate(p, 1.0 / r_)) * scale_.asDiagonal();
}

Box DilatedDomain::bbox() const {
  const Box b = inner_->bbox();
  const Vec3 s{r_, r_, r_ * r_};
  return {b.lo.cwiseProduct(s), b.hi.cwiseProduct(s)};
}

Vec3 DilatedDomain::periods() const {
  return inner_->periods().cwiseProduct(Vec3{r_, r_, r_ * r_});
}

}  // namespace hheat
