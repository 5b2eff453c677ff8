#pragma once

#include "gbcbf/core.hpp"

#include <limits>
#include <optional>

namespace gbcbf {

/// Half-space a^T u >= b.
struct HalfSpace {
  Vec a;
  double b = 0.0;
};

struct QpSolution {
  Vec u;
  bool optimal = false;
  int iterations = 0;
  std::string message;
};

struct QpOptions {
  double feas_tol = 1e-11;  // violation below this counts as satisfied
  int max_iterations = -1;  // -1: 50 * (dim + constraints)
};

/**
 * Dense dual active-set (Goldfarb-Idnani) solver for
 *
 *   min (u - u0)^T W (u - u0)   s.t.  a_j^T u >= b_j,  j = 0..k-1
 *
 * Starting from the unconstrained minimiser, the most violated constraint is
 * added at each outer iteration (ties go to the lowest index); constraints
 * whose multiplier would turn negative are dropped along the way. Every
 * iterate is dual feasible, so the method terminates at the optimum or
 * reports infeasibility. Box bounds are passed in as ordinary half-spaces.
 */
inline QpSolution solve_dense_qp(const Vec& u0, const Mat& w, const std::vector<HalfSpace>& cons,
                                 const QpOptions& opt = {}) {
  const Eigen::Index dim = u0.size();
  require(w.rows() == dim && w.cols() == dim, "solve_dense_qp: weight has wrong shape");
  for (const auto& c : cons) require(c.a.size() == dim, "solve_dense_qp: constraint has wrong dimension");

  QpSolution sol;
  const Eigen::LLT<Mat> llt(w);
  if (llt.info() != Eigen::Success) {
    sol.u = u0;
    sol.message = "weight matrix is not positive definite";
    return sol;
  }
  const Mat w_inv = llt.solve(Mat::Identity(dim, dim));

  const int k = static_cast<int>(cons.size());
  const int cap = opt.max_iterations > 0 ? opt.max_iterations : 50 * (static_cast<int>(dim) + k);
  constexpr double inf = std::numeric_limits<double>::infinity();

  Vec u = u0;
  std::vector<int> active;
  std::vector<double> lambda;
  std::vector<char> is_active(k, 0);

  while (true) {
    int p = -1;
    double worst = opt.feas_tol;
    for (int j = 0; j < k; ++j) {
      if (is_active[j]) continue;
      const double s = cons[j].b - cons[j].a.dot(u);
      if (s > worst) {
        worst = s;
        p = j;
      }
    }
    if (p < 0) {
      sol.u = u;
      sol.optimal = true;
      sol.message = "optimal";
      return sol;
    }

    const Vec& np = cons[p].a;
    double lambda_p = 0.0;
    while (true) {
      if (++sol.iterations > cap) {
        sol.u = u;
        sol.message = "iteration cap reached";
        return sol;
      }
      const auto q = static_cast<Eigen::Index>(active.size());
      Vec z;
      Vec r(q);
      if (q == 0) {
        z = w_inv * np;
      } else {
        Mat n_act(dim, q);
        for (Eigen::Index i = 0; i < q; ++i) n_act.col(i) = cons[active[i]].a;
        const Mat winv_n = w_inv * n_act;
        const Mat gram = n_act.transpose() * winv_n;
        const Eigen::LDLT<Mat> ldlt(gram);
        if (ldlt.info() != Eigen::Success) {
          sol.u = u;
          sol.message = "factorization failed";
          return sol;
        }
        r = ldlt.solve(winv_n.transpose() * np);
        z = w_inv * (np - n_act * r);
        if (!r.allFinite() || !z.allFinite()) {
          sol.u = u;
          sol.message = "factorization failed";
          return sol;
        }
      }

      // Largest dual step keeping active multipliers nonnegative.
      double t1 = inf;
      int drop = -1;
      for (Eigen::Index i = 0; i < q; ++i) {
        if (r(i) > 0.0) {
          const double ratio = lambda[i] / r(i);
          if (ratio < t1) {
            t1 = ratio;
            drop = static_cast<int>(i);
          }
        }
      }
      const double curvature = z.dot(np);
      const double t2 = curvature > 1e-14 * np.squaredNorm() * w_inv.norm()
                            ? (cons[p].b - np.dot(u)) / curvature
                            : inf;

      if (t1 == inf && t2 == inf) {
        sol.u = u;
        sol.message = "infeasible";
        return sol;
      }
      if (t2 == inf) {
        for (Eigen::Index i = 0; i < q; ++i) lambda[i] -= t1 * r(i);
        lambda_p += t1;
        is_active[active[drop]] = 0;
        active.erase(active.begin() + drop);
        lambda.erase(lambda.begin() + drop);
        continue;
      }
      const double t = std::min(t1, t2);
      u += t * z;
      for (Eigen::Index i = 0; i < q; ++i) lambda[i] -= t * r(i);
      lambda_p += t;
      if (t2 <= t1) {
        active.push_back(p);
        lambda.push_back(lambda_p);
        is_active[p] = 1;
        break;
      }
      is_active[active[drop]] = 0;
      active.erase(active.begin() + drop);
      lambda.erase(lambda.begin() + drop);
    }
  }
}

/// Lower and upper box faces as half-spaces (lower faces first, by coordinate).
inline std::vector<HalfSpace> box_halfspaces(const InputBox& box) {
  const int m = box.dim();
  std::vector<HalfSpace> out;
  out.reserve(2 * m);
  for (int i = 0; i < m; ++i) out.push_back({Vec::Unit(m, i), box.lo(i)});
  for (int i = 0; i < m; ++i) out.push_back({-Vec::Unit(m, i), -box.hi(i)});
  return out;
}

}  // namespace gbcbf
