#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbcbf {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a caller violates a documented precondition (dimensions, ranges).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

inline bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

/**
 * Control-affine dynamics  x' = f(x) + g(x) u.
 *
 * dgk_dx(x)[k] is the Jacobian of the k-th column of g. It may be left empty
 * when g is constant, in which case the column Jacobians are treated as zero.
 */
struct SystemModel {
  int n = 0;
  int m = 0;
  std::function<Vec(const Vec&)> f;
  std::function<Mat(const Vec&)> g;
  std::function<Mat(const Vec&)> df_dx;
  std::function<std::vector<Mat>(const Vec&)> dgk_dx;

  bool constant_input_matrix() const { return !static_cast<bool>(dgk_dx); }
};

/// Axis-aligned input set lo <= u <= hi.
struct InputBox {
  Vec lo;
  Vec hi;

  InputBox() = default;
  InputBox(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    require(lo.size() == hi.size(), "InputBox: lo/hi size mismatch");
    require((lo.array() <= hi.array()).all(), "InputBox: lo must not exceed hi");
  }

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& u) const {
    return u.size() == lo.size() && (u.array() >= lo.array()).all() &&
           (u.array() <= hi.array()).all();
  }

  Vec clamp(const Vec& u) const { return u.cwiseMax(lo).cwiseMin(hi); }

  /// Cartesian product of two boxes.
  static InputBox product(const InputBox& a, const InputBox& b) {
    Vec lo(a.dim() + b.dim()), hi(a.dim() + b.dim());
    lo << a.lo, b.lo;
    hi << a.hi, b.hi;
    return {lo, hi};
  }
};

/**
 * Input map u = k(x, theta) with its Jacobians. Laws without parameters have
 * dim_params == 0 and may leave dtheta empty.
 */
struct ControlLaw {
  int n = 0;
  int m = 0;
  int dim_params = 0;
  std::function<Vec(const Vec&, const Vec&)> value;
  std::function<Mat(const Vec&, const Vec&)> dx;
  std::function<Mat(const Vec&, const Vec&)> dtheta;

  Vec operator()(const Vec& x, const Vec& theta = Vec()) const { return value(x, theta); }

  Mat jac_theta(const Vec& x, const Vec& theta) const {
    if (dim_params == 0 || !dtheta) return Mat::Zero(m, dim_params);
    return dtheta(x, theta);
  }
};

/// Scalar field v(x) with row gradient; sets are represented as {v >= 0}.
struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<RowVec(const Vec&)> grad;

  double operator()(const Vec& x) const { return value(x); }
};

struct SmoothingParams {
  double eps_switch = 1e-3;
  double delta_sat = 0.1;
  double kappa = 10.0;

  void validate() const {
    require(eps_switch > 0.0, "SmoothingParams: eps_switch must be positive");
    require(delta_sat > 0.0, "SmoothingParams: delta_sat must be positive");
    require(kappa > 0.0, "SmoothingParams: kappa must be positive");
  }
};

// Central finite differences, step 1e-6 per coordinate.
inline constexpr double kFdStep = 1e-6;

template <class Fn>
Mat fd_jacobian(Fn&& fn, const Vec& x, double step = kFdStep) {
  const Vec f0 = fn(x);
  Mat jac(f0.size(), x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + step;
    xm(j) = x(j) - step;
    jac.col(j) = (fn(xp) - fn(xm)) / (2.0 * step);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return jac;
}

template <class Fn>
RowVec fd_gradient(Fn&& fn, const Vec& x, double step = kFdStep) {
  RowVec grad(x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + step;
    xm(j) = x(j) - step;
    grad(j) = (fn(xp) - fn(xm)) / (2.0 * step);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return grad;
}

/// Fills in any missing Jacobians of a user-defined law with central differences.
inline ControlLaw with_fd_jacobians(ControlLaw law) {
  if (!law.dx) {
    auto value = law.value;
    law.dx = [value](const Vec& x, const Vec& th) {
      return fd_jacobian([&](const Vec& z) { return value(z, th); }, x);
    };
  }
  if (law.dim_params > 0 && !law.dtheta) {
    auto value = law.value;
    law.dtheta = [value](const Vec& x, const Vec& th) {
      return fd_jacobian([&](const Vec& t) { return value(x, t); }, th);
    };
  }
  return law;
}

inline ScalarField with_fd_gradient(ScalarField field) {
  if (!field.grad) {
    auto value = field.value;
    field.grad = [value](const Vec& x) { return fd_gradient(value, x); };
  }
  return field;
}

/// Relative discrepancy ||a - b||_inf / max(||b||_inf, floor).
inline double rel_error(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b,
                        double floor = 1e-12) {
  const double denom = std::max(b.lpNorm<Eigen::Infinity>(), floor);
  return (a - b).lpNorm<Eigen::Infinity>() / denom;
}

}  // namespace gbcbf
