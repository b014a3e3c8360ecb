#pragma once

#include <memory>
#include <string>

#include "hheat/hgroup.hpp"

namespace hheat {

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }
  double diameter() const { return extent().norm(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

/// Omega = {F < 0}. Gradient and Hessian are exact (coordinate derivatives).
class ImplicitDomain {
 public:
  virtual ~ImplicitDomain() = default;

  virtual double value(const HPoint& p) const = 0;
  virtual Vec3 gradient(const HPoint& p) const = 0;
  virtual Mat3 hessian(const HPoint& p) const = 0;
  virtual Box bbox() const = 0;
  virtual std::string name() const = 0;

  /// Per-axis period of the domain, 0 for a non-periodic axis. Periodic
  /// domains are integrated over the single cell given by bbox().
  virtual Vec3 periods() const { return Vec3::Zero(); }
};

using DomainPtr = std::shared_ptr<const ImplicitDomain>;

/// x1^2 + x2^2 < R^2, periodic in x3.
class CylinderDomain final : public ImplicitDomain {
 public:
  CylinderDomain(double radius, double z_period);
  double value(const HPoint& p) const override;
  Vec3 gradient(const HPoint& p) const override;
  Mat3 hessian(const HPoint& p) const override;
  Box bbox() const override;
  std::string name() const override { return "cylinder"; }
  Vec3 periods() const override { return {0.0, 0.0, period_}; }
  double radius() const { return radius_; }

 private:
  double radius_;
  double period_;
};

/// |x1| < c, periodic in x2 and x3 with unit cell.
class SlabDomain final : public ImplicitDomain {
 public:
  explicit SlabDomain(double half_width);
  double value(const HPoint& p) const override;
  Vec3 gradient(const HPoint& p) const override;
  Mat3 hessian(const HPoint& p) const override;
  Box bbox() const override;
  std::string name() const override { return "vertical_slab"; }
  Vec3 periods() const override { return {0.0, 1.0, 1.0}; }

 private:
  double c_;
};

/// x1 < c. Unbounded; bbox is a nominal unit cell around the wall.
class HalfSpaceDomain final : public ImplicitDomain {
 public:
  explicit HalfSpaceDomain(double c);
  double value(const HPoint& p) const override { return p.x1 - c_; }
  Vec3 gradient(const HPoint&) const override { return {1.0, 0.0, 0.0}; }
  Mat3 hessian(const HPoint&) const override { return Mat3::Zero(); }
  Box bbox() const override;
  std::string name() const override { return "half_space"; }
  Vec3 periods() const override { return {0.0, 1.0, 1.0}; }

 private:
  double c_;
};

/// (x1^2 + x2^2)^2 + 4 x3^2 < r^4. Characteristic at (0, 0, +-r^2/2).
class KoranyiBallDomain final : public ImplicitDomain {
 public:
  explicit KoranyiBallDomain(double r);
  double value(const HPoint& p) const override;
  Vec3 gradient(const HPoint& p) const override;
  Mat3 hessian(const HPoint& p) const override;
  Box bbox() const override;
  std::string name() const override { return "koranyi_ball"; }

 private:
  double r_;
};

/// Left translate g * Omega.
class TranslatedDomain final : public ImplicitDomain {
 public:
  TranslatedDomain(DomainPtr inner, const HPoint& g);
  double value(const HPoint& p) const override;
  Vec3 gradient(const HPoint& p) const override;
  Mat3 hessian(const HPoint& p) const override;
  Box bbox() const override;
  std::string name() const override { return "translated_" + inner_->name(); }
  Vec3 periods() const override { return inner_->periods(); }

 private:
  HPoint pull(const HPoint& p) const { return group_mul(group_inv(g_), p); }
  DomainPtr inner_;
  HPoint g_;
  Mat3 m_;  // derivative of p -> g^{-1} * p
};

/// Dilation delta_r(Omega).
class DilatedDomain final : public ImplicitDomain {
 public:
  DilatedDomain(DomainPtr inner, double r);
  double value(const HPoint& p) const override;
  Vec3 gradient(const HPoint& p) const override;
  Mat3 hessian(const HPoint& p) const override;
  Box bbox() const override;
  std::string name() const override { return "dilated_" + inner_->name(); }
  Vec3 periods() const override;

 private:
  DomainPtr inner_;
  double r_;
  Vec3 scale_;
};

}  // namespace hheat
