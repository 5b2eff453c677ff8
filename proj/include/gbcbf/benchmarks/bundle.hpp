#pragma once

#include "gbcbf/flow.hpp"

#include <map>
#include <string>

namespace gbcbf {

/// Thrown when a benchmark configuration fails one of its construction checks.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * A ready-to-run problem: plant, input box, safe and backup sets, backup law,
 * named fixed expanders, a parameterized expander for adaptation, and a
 * nominal law.
 */
struct ProblemBundle {
  std::string id;
  SystemModel sys;
  InputBox box;
  ScalarField h;
  ScalarField h_b;
  ControlLaw k_b;
  std::map<std::string, ControlLaw> expanders;
  std::string default_expander;
  ControlLaw k_e_param;
  Vec theta0;
  InputBox theta_bounds;
  ControlLaw nominal;
  double eps = 1e-3;
  IntegratorConfig cfg;
  Vec x_eq;  // centre of the backup set
  Mat P;
  double rho = 0.0;
  /// True when every saturation inside k_b is in its identity core at x.
  std::function<bool(const Vec&)> backup_unsaturated;

  const ControlLaw& expander(const std::string& name) const {
    auto it = expanders.find(name);
    if (it == expanders.end()) throw InvalidArgument("unknown expander '" + name + "' for bundle " + id);
    return it->second;
  }

  SwitchedController switched(const std::string& expander_name) const {
    return SwitchedController{expander(expander_name), k_b, h_b, eps};
  }

  SwitchedController switched_param() const { return SwitchedController{k_e_param, k_b, h_b, eps}; }
};

/// h_b(x) = rho - (x - c)^T P (x - c)
inline ScalarField ellipsoid_field(const Vec& centre, const Mat& p, double rho) {
  ScalarField f;
  f.value = [centre, p, rho](const Vec& x) {
    const Vec d = x - centre;
    return rho - d.dot(p * d);
  };
  f.grad = [centre, p](const Vec& x) -> RowVec { return -2.0 * (p * (x - centre)).transpose(); };
  return f;
}

}  // namespace gbcbf
