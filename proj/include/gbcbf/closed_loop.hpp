#pragma once

#include "gbcbf/core.hpp"

namespace gbcbf {

inline void check_dims(const SystemModel& sys, const ControlLaw& law, const Vec& x) {
  require(x.size() == sys.n, "closed loop: state has wrong dimension");
  require(law.m == sys.m, "closed loop: law input dimension does not match system");
  require(law.n == sys.n, "closed loop: law state dimension does not match system");
}

/// f(x) + g(x) k(x, theta)
inline Vec closed_loop_rhs(const SystemModel& sys, const ControlLaw& law, const Vec& x,
                           const Vec& theta = Vec()) {
  check_dims(sys, law, x);
  return sys.f(x) + sys.g(x) * law.value(x, theta);
}

/// Value and state Jacobian of the closed loop, sharing one evaluation of g and k.
struct ClosedLoopEval {
  Vec rhs;
  Mat jac;
};

inline ClosedLoopEval closed_loop_eval(const SystemModel& sys, const ControlLaw& law, const Vec& x,
                                       const Vec& theta) {
  const Vec u = law.value(x, theta);
  const Mat g = sys.g(x);
  ClosedLoopEval out;
  out.rhs = sys.f(x) + g * u;
  out.jac = sys.df_dx(x) + g * law.dx(x, theta);
  if (!sys.constant_input_matrix()) {
    const std::vector<Mat> dg = sys.dgk_dx(x);
    for (int k = 0; k < sys.m; ++k) out.jac += dg[k] * u(k);
  }
  return out;
}

/// df/dx + sum_k (dg_k/dx) u_k + g dk/dx
inline Mat closed_loop_jacobian(const SystemModel& sys, const ControlLaw& law, const Vec& x,
                                const Vec& theta = Vec()) {
  check_dims(sys, law, x);
  return closed_loop_eval(sys, law, x, theta).jac;
}

/// Law that ignores the state and returns a constant input.
inline ControlLaw constant_law(int n, const Vec& u) {
  ControlLaw law;
  law.n = n;
  law.m = static_cast<int>(u.size());
  law.value = [u](const Vec&, const Vec&) { return u; };
  law.dx = [n, m = law.m](const Vec&, const Vec&) { return Mat::Zero(m, n); };
  return law;
}

}  // namespace gbcbf
