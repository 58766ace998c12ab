#pragma once

#include <memory>
#include <vector>

#include "ofmpc/disturbance.hpp"
#include "ofmpc/dual.hpp"
#include "ofmpc/dynamics.hpp"

namespace ofmpc {

/// Nominal dynamics (mismatched parameter copy) composed with the disturbance
/// model: the one-step state map integrates the corrected vector field
/// rhs(x, u) + h_x(x, u, theta) over the sample period with the input held,
/// so a disturbance model matching the plant/model rhs difference makes the
/// prediction exact. The output is the selected state components plus
/// d_y = h_y(x, theta) when present.
class PredictionModel {
 public:
  PredictionModel(std::shared_ptr<const OdeSystem> nominal, double sample_time,
                  int substeps, DisturbanceModel disturbance,
                  std::vector<int> output_indices);

  int n_state() const { return nominal_->n_state(); }
  int n_input() const { return nominal_->n_input(); }
  int n_output() const { return static_cast<int>(output_indices_.size()); }
  int n_theta() const { return disturbance_.n_theta(); }
  double sample_time() const { return sample_time_; }
  int substeps() const { return substeps_; }
  const OdeSystem& nominal() const { return *nominal_; }
  const DisturbanceModel& disturbance() const { return disturbance_; }
  const std::vector<int>& output_indices() const { return output_indices_; }

  template <typename Scalar>
  VecX<Scalar> predict_state(const VecX<Scalar>& x, const VecX<Scalar>& u,
                             const VecX<Scalar>& theta) const {
    return rk4_integrate<Scalar>(
        [&](const VecX<Scalar>& xs) {
          return nominal_->rhs(xs, u, disturbance_.eval_hx(xs, u, theta));
        },
        x, sample_time_, substeps_);
  }

  template <typename Scalar>
  VecX<Scalar> predict_output(const VecX<Scalar>& x,
                              const VecX<Scalar>& theta) const {
    const VecX<Scalar> d_y = disturbance_.eval_hy(x, theta);
    VecX<Scalar> y(output_indices_.size());
    for (std::size_t i = 0; i < output_indices_.size(); ++i) {
      y(i) = x(output_indices_[i]);
      if (d_y.size() > 0) y(i) += d_y(i);
    }
    return y;
  }

  /// Jacobian of the joint map (x, theta) -> x(k+1) completed with the
  /// parameter random-walk rows [0 I]; square of size n_state + n_theta.
  Mat a_matrix(const Vec& x, const Vec& u, const Vec& theta) const;

  /// Jacobian of (x, theta) -> y; n_output rows, n_state + n_theta columns.
  Mat c_matrix(const Vec& x, const Vec& theta) const;

  struct Linearization {
    Mat a;
    Mat c;
  };

  /// Both Jacobians at the same evaluation point. The EKF evaluates C at the
  /// prediction and A at the filtered estimate, via the split calls above.
  Linearization linearize(const Vec& x, const Vec& u, const Vec& theta) const;

 private:
  std::shared_ptr<const OdeSystem> nominal_;
  double sample_time_;
  int substeps_;
  DisturbanceModel disturbance_;
  std::vector<int> output_indices_;
};

}  // namespace ofmpc
