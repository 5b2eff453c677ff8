#pragma once

#include "gbcbf/core.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace gbcbf {

class LyapunovError : public std::runtime_error {
 public:
  LyapunovError(const std::string& what, Eigen::VectorXcd eigenvalues)
      : std::runtime_error(what), eigenvalues_(std::move(eigenvalues)) {}
  const Eigen::VectorXcd& eigenvalues() const { return eigenvalues_; }

 private:
  Eigen::VectorXcd eigenvalues_;
};

inline bool is_hurwitz(const Mat& a, Eigen::VectorXcd* eig_out = nullptr) {
  Eigen::EigenSolver<Mat> es(a, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  if (eig_out) *eig_out = ev;
  return (ev.real().array() < 0.0).all();
}

/**
 * Solves A^T P + P A = -Q for symmetric P.
 *
 * The n(n+1)/2 upper-triangular entries of P are the unknowns; the operator is
 * applied to each symmetric basis matrix to build the dense linear system.
 */
inline Mat solve_lyapunov(const Mat& a_cl, const Mat& q) {
  const Eigen::Index n = a_cl.rows();
  require(a_cl.cols() == n && q.rows() == n && q.cols() == n, "solve_lyapunov: dimension mismatch");
  require((q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + q.cwiseAbs().maxCoeff()),
          "solve_lyapunov: Q must be symmetric");

  Eigen::VectorXcd ev;
  if (!is_hurwitz(a_cl, &ev)) {
    std::ostringstream os;
    os << "solve_lyapunov: closed-loop matrix is not Hurwitz; eigenvalues:";
    for (Eigen::Index i = 0; i < ev.size(); ++i) os << ' ' << ev(i);
    throw LyapunovError(os.str(), ev);
  }

  const Eigen::Index k = n * (n + 1) / 2;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> idx;
  idx.reserve(k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) idx.emplace_back(i, j);

  Mat lhs(k, k);
  Vec rhs(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Mat e = Mat::Zero(n, n);
    e(idx[c].first, idx[c].second) = 1.0;
    e(idx[c].second, idx[c].first) = 1.0;
    const Mat img = a_cl.transpose() * e + e * a_cl;
    for (Eigen::Index r = 0; r < k; ++r) lhs(r, c) = img(idx[r].first, idx[r].second);
  }
  for (Eigen::Index r = 0; r < k; ++r) rhs(r) = -q(idx[r].first, idx[r].second);

  const Vec sol = lhs.fullPivLu().solve(rhs);
  Mat p(n, n);
  for (Eigen::Index c = 0; c < k; ++c) {
    p(idx[c].first, idx[c].second) = sol(c);
    p(idx[c].second, idx[c].first) = sol(c);
  }

  const double residual = (a_cl.transpose() * p + p * a_cl + q).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-8 * std::max(1.0, q.lpNorm<Eigen::Infinity>()))) {
    throw LyapunovError("solve_lyapunov: residual " + std::to_string(residual) + " too large", ev);
  }
  return p;
}

/// Symmetric inverse square root via eigen-decomposition (P must be SPD).
inline Mat inverse_sqrt_spd(const Mat& p) {
  Eigen::SelfAdjointEigenSolver<Mat> es(p);
  require((es.eigenvalues().array() > 0.0).all(), "inverse_sqrt_spd: matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace gbcbf
