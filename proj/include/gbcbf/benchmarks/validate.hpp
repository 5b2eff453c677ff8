#pragma once

#include "gbcbf/benchmarks/bundle.hpp"
#include "gbcbf/closed_loop.hpp"
#include "gbcbf/lyapunov.hpp"

#include <random>

namespace gbcbf {

struct BackupReport {
  int samples = 0;
  double worst_boundary_rate = std::numeric_limits<double>::infinity();  // min of dh_b/dt on the boundary
  int saturated_samples = 0;                                            // interior samples outside the core
  double worst_safety = std::numeric_limits<double>::infinity();        // min h over backup-set samples
  bool rate_ok = false;
  bool unsaturated_ok = false;
  bool contained_ok = false;

  bool passed() const { return rate_ok && unsaturated_ok && contained_ok; }
};

inline constexpr double kBoundaryRateTol = 1e-8;

/**
 * Empirical check of the backup pair on an ellipsoidal backup set:
 *   - dh_b/dt under k_b is >= -1e-8 on sampled boundary points,
 *   - k_b stays in its identity core on boundary and interior samples,
 *   - h >= 0 on the same samples (backup set inside the safe set).
 * Boundary points are x_eq + sqrt(rho) P^{-1/2} s with s uniform on the sphere.
 */
inline BackupReport validate_backup_pair(const ProblemBundle& b, int samples, std::uint64_t seed = 7) {
  require(samples >= 1, "validate_backup_pair: need at least one sample");
  const int n = b.sys.n;
  const Mat map = std::sqrt(b.rho) * inverse_sqrt_spd(b.P);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  BackupReport rep;
  rep.samples = samples;
  for (int i = 0; i < samples; ++i) {
    Vec dir(n);
    for (int j = 0; j < n; ++j) dir(j) = normal(rng);
    dir /= dir.norm();
    const Vec xb = b.x_eq + map * dir;
    const double rate = b.h_b.grad(xb).dot(closed_loop_rhs(b.sys, b.k_b, xb));
    rep.worst_boundary_rate = std::min(rep.worst_boundary_rate, rate);
    const double radius = std::pow(unif(rng), 1.0 / n);
    const Vec xi = b.x_eq + radius * (map * dir);
    for (const Vec* s : {&xb, &xi}) {
      if (b.backup_unsaturated && !b.backup_unsaturated(*s)) ++rep.saturated_samples;
      rep.worst_safety = std::min(rep.worst_safety, b.h(*s));
    }
  }
  rep.rate_ok = rep.worst_boundary_rate >= -kBoundaryRateTol;
  rep.unsaturated_ok = rep.saturated_samples == 0;
  rep.contained_ok = rep.worst_safety >= 0.0;
  return rep;
}

}  // namespace gbcbf
