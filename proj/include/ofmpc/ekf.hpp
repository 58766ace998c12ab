#pragma once

#include "ofmpc/model.hpp"

namespace ofmpc {

/// Joint state/parameter estimate carried between samples: the time-k
/// prediction (x(k|k-1), theta(k|k-1)), its covariance, and the fixed noise
/// covariances used by the updates.
struct EkfState {
  Vec x_pred;
  Vec theta_pred;
  Mat p_pred;   // (n_x+n_theta) square, kept symmetric PSD
  Mat q_x;      // n_x square
  Mat q_theta;  // n_theta square
  Mat q_y;      // p square
};

/// Result of a measurement update: the filtered pair, its covariance, and the
/// output prediction error that drove the correction.
struct EkfFiltered {
  Vec x;
  Vec theta;
  Mat p;
  Vec innovation;
};

EkfState make_ekf_state(const PredictionModel& model, const Vec& x0,
                        const Vec& theta0, const Mat& p0, const Mat& q_x,
                        const Mat& q_theta, const Mat& q_y);

/// Innovation, gain, and covariance correction with C evaluated at the
/// prediction. Throws FilterDivergenceError when the innovation covariance
/// is numerically singular (condition number above 1e12).
EkfFiltered ekf_measurement_update(const EkfState& ekf,
                                   const PredictionModel& model, const Vec& y);

/// Propagates the filtered pair through the prediction model; theta is a
/// random walk and keeps its filtered value. A is evaluated at the filtered
/// estimate and the applied input.
EkfState ekf_time_update(const EkfState& ekf, const EkfFiltered& filtered,
                         const PredictionModel& model, const Vec& u);

}  // namespace ofmpc
