#pragma once

#include <Eigen/Dense>

#include "ofmpc/dual.hpp"

namespace ofmpc::detail {

struct KktStep {
  Vec dz;
  Vec nu;
  double solve_residual;  // consistency of the linear solve itself
};

/// Solves the equality-constrained QP step
///   min 1/2 dz' H dz + grad' dz   s.t.  jac dz + c = 0
/// through its KKT system. A rank-revealing solve tolerates redundant but
/// consistent constraints; solve_residual exposes inconsistency.
inline KktStep solve_kkt(const Mat& h, const Mat& jac, const Vec& grad,
                         const Vec& c) {
  const int nz = static_cast<int>(h.rows());
  const int nc = static_cast<int>(jac.rows());
  Mat kkt = Mat::Zero(nz + nc, nz + nc);
  kkt.topLeftCorner(nz, nz) = h;
  kkt.topRightCorner(nz, nc) = jac.transpose();
  kkt.bottomLeftCorner(nc, nz) = jac;
  Vec rhs(nz + nc);
  rhs.head(nz) = -grad;
  rhs.tail(nc) = -c;

  const Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  KktStep step;
  step.dz = sol.head(nz);
  step.nu = sol.tail(nc);
  step.solve_residual = (kkt * sol - rhs).lpNorm<Eigen::Infinity>() /
                        (1.0 + rhs.lpNorm<Eigen::Infinity>());
  return step;
}

/// Least-squares multipliers for the stationarity residual at the current
/// iterate: argmin_nu || grad + jac' nu ||.
inline Vec multipliers(const Mat& jac, const Vec& grad) {
  if (jac.rows() == 0) return Vec(0);
  return jac.transpose().completeOrthogonalDecomposition().solve(-grad);
}

inline double stationarity(const Mat& jac, const Vec& grad, const Vec& nu) {
  if (jac.rows() == 0) return grad.lpNorm<Eigen::Infinity>();
  return (grad + jac.transpose() * nu).lpNorm<Eigen::Infinity>();
}

}  // namespace ofmpc::detail
