#include "ofmpc/ekf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace ofmpc {

namespace {

void check_square(const Mat& m, int n, const char* name) {
  if (m.rows() != n || m.cols() != n)
    throw DimensionError(std::string("ekf: ") + name + " must be " +
                         std::to_string(n) + "x" + std::to_string(n));
}

Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

EkfState make_ekf_state(const PredictionModel& model, const Vec& x0,
                        const Vec& theta0, const Mat& p0, const Mat& q_x,
                        const Mat& q_theta, const Mat& q_y) {
  const int nx = model.n_state();
  const int nt = model.n_theta();
  if (x0.size() != nx || theta0.size() != nt)
    throw DimensionError("ekf: initial estimate arity mismatch");
  check_square(p0, nx + nt, "P0");
  check_square(q_x, nx, "Q_x");
  check_square(q_theta, nt, "Q_theta");
  check_square(q_y, model.n_output(), "Q_y");
  return EkfState{x0, theta0, symmetrized(p0), q_x, q_theta, q_y};
}

EkfFiltered ekf_measurement_update(const EkfState& ekf,
                                   const PredictionModel& model,
                                   const Vec& y) {
  const int nx = model.n_state();
  const int nt = model.n_theta();
  const int n = nx + nt;
  const int p = model.n_output();
  if (y.size() != p) throw DimensionError("ekf: measurement arity mismatch");

  const Mat c = model.c_matrix(ekf.x_pred, ekf.theta_pred);
  const Vec y_pred = model.predict_output(ekf.x_pred, ekf.theta_pred);
  const Vec innovation = y - y_pred;
  if (!all_finite(innovation))
    throw NonFiniteError("ekf: non-finite innovation");

  const Mat b = symmetrized(c * ekf.p_pred * c.transpose() + ekf.q_y);
  Eigen::SelfAdjointEigenSolver<Mat> eig(b);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw FilterDivergenceError(
        "ekf: innovation covariance numerically singular");

  // M = P C' B^{-1} via a symmetric solve; B is PD here.
  const Mat gain = b.ldlt().solve(c * ekf.p_pred).transpose();
  const Vec correction = gain * innovation;

  EkfFiltered out;
  out.x = ekf.x_pred + correction.head(nx);
  out.theta = ekf.theta_pred + correction.tail(nt);
  out.p = symmetrized((Mat::Identity(n, n) - gain * c) * ekf.p_pred);
  out.innovation = innovation;
  return out;
}

EkfState ekf_time_update(const EkfState& ekf, const EkfFiltered& filtered,
                         const PredictionModel& model, const Vec& u) {
  const int nx = model.n_state();
  const int nt = model.n_theta();
  if (u.size() != model.n_input())
    throw DimensionError("ekf: input arity mismatch");

  const Mat a = model.a_matrix(filtered.x, u, filtered.theta);
  Mat q = Mat::Zero(nx + nt, nx + nt);
  q.topLeftCorner(nx, nx) = ekf.q_x;
  q.bottomRightCorner(nt, nt) = ekf.q_theta;

  EkfState next = ekf;
  next.x_pred = model.predict_state(filtered.x, u, filtered.theta);
  next.theta_pred = filtered.theta;
  next.p_pred = symmetrized(a * filtered.p * a.transpose() + q);
  return next;
}

}  // namespace ofmpc
