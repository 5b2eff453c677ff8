#pragma once

#include "gbcbf/core.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace gbcbf {

// C^1 step: 0 below -eps, 1 above 0, cubic 3s^2 - 2s^3 in between.
inline double smoothstep(double z, double eps) {
  require(eps > 0.0, "smoothstep: eps must be positive");
  if (z <= -eps) return 0.0;
  if (z >= 0.0) return 1.0;
  const double s = (z + eps) / eps;
  return s * s * (3.0 - 2.0 * s);
}

inline double smoothstep_grad(double z, double eps) {
  require(eps > 0.0, "smoothstep_grad: eps must be positive");
  if (z <= -eps || z >= 0.0) return 0.0;
  const double s = (z + eps) / eps;
  return 6.0 * s * (1.0 - s) / eps;
}

namespace detail {
inline void check_sat_args(double lo, double hi, double delta) {
  require(lo < hi, "smooth_sat: degenerate interval (lo >= hi)");
  require(delta > 0.0 && delta < 0.5 * (hi - lo), "smooth_sat: delta must lie in (0, (hi-lo)/2)");
}
}  // namespace detail

/**
 * Saturation to [lo, hi] that is the identity on [lo + delta, hi - delta] and
 * blends quadratically into the bounds over a band of half-width delta, so the
 * result is C^1 and never leaves [lo, hi].
 */
inline double smooth_sat(double z, double lo, double hi, double delta) {
  detail::check_sat_args(lo, hi, delta);
  if (z >= hi + delta) return hi;
  if (z <= lo - delta) return lo;
  if (z > hi - delta) {
    const double r = hi + delta - z;
    return std::min(hi, hi - r * r / (4.0 * delta));
  }
  if (z < lo + delta) {
    const double r = z - lo + delta;
    return std::max(lo, lo + r * r / (4.0 * delta));
  }
  return z;
}

inline double smooth_sat_grad(double z, double lo, double hi, double delta) {
  detail::check_sat_args(lo, hi, delta);
  if (z >= hi + delta || z <= lo - delta) return 0.0;
  if (z > hi - delta) return (hi + delta - z) / (2.0 * delta);
  if (z < lo + delta) return (z - lo + delta) / (2.0 * delta);
  return 1.0;
}

/// True when z lies in the identity core of smooth_sat.
inline bool in_sat_core(double z, double lo, double hi, double delta) {
  return z >= lo + delta && z <= hi - delta;
}

// One-sided variant: identity above lo + delta, constant lo below lo - delta.
inline double smooth_floor(double z, double lo, double delta) {
  require(delta > 0.0, "smooth_floor: delta must be positive");
  if (z >= lo + delta) return z;
  if (z <= lo - delta) return lo;
  const double r = z - lo + delta;
  return lo + r * r / (4.0 * delta);
}

inline double smooth_floor_grad(double z, double lo, double delta) {
  require(delta > 0.0, "smooth_floor_grad: delta must be positive");
  if (z >= lo + delta) return 1.0;
  if (z <= lo - delta) return 0.0;
  return (z - lo + delta) / (2.0 * delta);
}

/**
 * Log-sum-exp minimum: -(1/kappa) log sum exp(-kappa v_i). Never exceeds the
 * true minimum. Evaluated with a max shift so large kappa*v cannot overflow.
 */
inline double smooth_min(std::span<const double> v, double kappa) {
  require(!v.empty(), "smooth_min: empty input");
  require(kappa > 0.0, "smooth_min: kappa must be positive");
  const double lo = *std::min_element(v.begin(), v.end());
  double acc = 0.0;
  for (double vi : v) acc += std::exp(-kappa * (vi - lo));
  return lo - std::log(acc) / kappa;
}

/// d smooth_min / d v_i (softmin weights, sum to one).
inline std::vector<double> smooth_min_grad(std::span<const double> v, double kappa) {
  require(!v.empty(), "smooth_min_grad: empty input");
  require(kappa > 0.0, "smooth_min_grad: kappa must be positive");
  const double lo = *std::min_element(v.begin(), v.end());
  std::vector<double> w(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = std::exp(-kappa * (v[i] - lo));
    acc += w[i];
  }
  for (double& wi : w) wi /= acc;
  return w;
}

/**
 * Shifted log-sum-exp maximum: (1/kappa)(log sum exp(kappa v_i) - log k).
 * The -log(k) shift makes it a lower bound on the true maximum.
 */
inline double smooth_max(std::span<const double> v, double kappa) {
  require(!v.empty(), "smooth_max: empty input");
  require(kappa > 0.0, "smooth_max: kappa must be positive");
  const double hi = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double vi : v) acc += std::exp(kappa * (vi - hi));
  return hi + (std::log(acc) - std::log(static_cast<double>(v.size()))) / kappa;
}

inline std::vector<double> smooth_max_grad(std::span<const double> v, double kappa) {
  require(!v.empty(), "smooth_max_grad: empty input");
  require(kappa > 0.0, "smooth_max_grad: kappa must be positive");
  const double hi = *std::max_element(v.begin(), v.end());
  std::vector<double> w(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = std::exp(kappa * (v[i] - hi));
    acc += w[i];
  }
  for (double& wi : w) wi /= acc;
  return w;
}

inline double smooth_min(std::initializer_list<double> v, double kappa) {
  return smooth_min(std::span<const double>(v.begin(), v.size()), kappa);
}
inline double smooth_max(std::initializer_list<double> v, double kappa) {
  return smooth_max(std::span<const double>(v.begin(), v.size()), kappa);
}

}  // namespace gbcbf
