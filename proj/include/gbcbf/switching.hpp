#pragma once

#include "gbcbf/core.hpp"
#include "gbcbf/smooth.hpp"

namespace gbcbf {

/**
 * Blend of an expanding law k_e and a backup law k_b:
 *
 *   k_s(x, theta) = (1 - eta(x)) k_e(x, theta) + eta(x) k_b(x),  eta = Gamma(h_b(x))
 *
 * where Gamma is the C^1 smoothstep of width eps. eta is exactly one on the
 * backup set {h_b >= 0}, so k_s coincides with k_b there.
 */
struct SwitchedController {
  ControlLaw k_e;
  ControlLaw k_b;
  ScalarField h_b;
  double eps = 1e-3;

  int n() const { return k_b.n; }
  int m() const { return k_b.m; }
  int dim_params() const { return k_e.dim_params; }

  void validate() const {
    require(eps > 0.0, "SwitchedController: eps must be positive");
    require(k_e.m == k_b.m && k_e.n == k_b.n, "SwitchedController: k_e and k_b dimensions differ");
    require(k_b.dim_params == 0, "SwitchedController: backup law must not take parameters");
  }

  double eta(const Vec& x) const { return smoothstep(h_b(x), eps); }

  RowVec eta_grad(const Vec& x) const {
    const double d = smoothstep_grad(h_b(x), eps);
    if (d == 0.0) return RowVec::Zero(x.size());
    return d * h_b.grad(x);
  }
};

// Written as k_e + eta (k_b - k_e) with the eta == 0 / eta == 1 branches
// returning the component laws untouched; when k_e and k_b agree bitwise the
// blend returns k_b bitwise as well.
inline Vec switched_control(const SwitchedController& sc, const Vec& x, const Vec& theta = Vec()) {
  const double eta = sc.eta(x);
  if (eta == 1.0) return sc.k_b.value(x, Vec());
  const Vec ue = sc.k_e.value(x, theta);
  if (eta == 0.0) return ue;
  const Vec ub = sc.k_b.value(x, Vec());
  return ue + eta * (ub - ue);
}

inline Mat switched_jacobian(const SwitchedController& sc, const Vec& x, const Vec& theta = Vec()) {
  const double z = sc.h_b(x);
  const double eta = smoothstep(z, sc.eps);
  if (eta == 1.0 && smoothstep_grad(z, sc.eps) == 0.0) return sc.k_b.dx(x, Vec());
  const Mat je = sc.k_e.dx(x, theta);
  if (eta == 0.0 && smoothstep_grad(z, sc.eps) == 0.0) return je;
  const Mat jb = sc.k_b.dx(x, Vec());
  const Vec ue = sc.k_e.value(x, theta);
  const Vec ub = sc.k_b.value(x, Vec());
  Mat out = je + eta * (jb - je);
  const double dg = smoothstep_grad(z, sc.eps);
  if (dg != 0.0) out += (ub - ue) * (dg * sc.h_b.grad(x));
  return out;
}

inline Mat switched_dtheta(const SwitchedController& sc, const Vec& x, const Vec& theta = Vec()) {
  const double eta = sc.eta(x);
  return (1.0 - eta) * sc.k_e.jac_theta(x, theta);
}

/// Views the switched controller as an ordinary (parameterized) control law.
inline ControlLaw as_control_law(const SwitchedController& sc) {
  sc.validate();
  ControlLaw law;
  law.n = sc.n();
  law.m = sc.m();
  law.dim_params = sc.dim_params();
  law.value = [sc](const Vec& x, const Vec& th) { return switched_control(sc, x, th); };
  law.dx = [sc](const Vec& x, const Vec& th) { return switched_jacobian(sc, x, th); };
  if (law.dim_params > 0) {
    law.dtheta = [sc](const Vec& x, const Vec& th) { return switched_dtheta(sc, x, th); };
  }
  return law;
}

}  // namespace gbcbf
