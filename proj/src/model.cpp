#include "ofmpc/model.hpp"

namespace ofmpc {

PredictionModel::PredictionModel(std::shared_ptr<const OdeSystem> nominal,
                                 double sample_time, int substeps,
                                 DisturbanceModel disturbance,
                                 std::vector<int> output_indices)
    : nominal_(std::move(nominal)),
      sample_time_(sample_time),
      substeps_(substeps),
      disturbance_(std::move(disturbance)),
      output_indices_(std::move(output_indices)) {
  if (!nominal_) throw ConfigError("PredictionModel: null dynamics");
  if (sample_time_ <= 0.0)
    throw ConfigError("PredictionModel: sample_time must be positive");
  if (substeps_ < 1) throw ConfigError("PredictionModel: substeps must be >= 1");
  for (int idx : output_indices_)
    if (idx < 0 || idx >= nominal_->n_state())
      throw ConfigError("PredictionModel: output index out of range");
  if (disturbance_.n_dy() > 0 &&
      disturbance_.n_dy() != static_cast<int>(output_indices_.size()))
    throw DimensionError("PredictionModel: n_dy must match the output arity");
  if (disturbance_.n_dx() > nominal_->n_state())
    throw DimensionError("PredictionModel: n_dx exceeds the state arity");
}

Mat PredictionModel::a_matrix(const Vec& x, const Vec& u,
                              const Vec& theta) const {
  const int nx = n_state();
  const int nt = n_theta();
  const int n = nx + nt;
  const DualVec xd = seed_vector(x, n, 0);
  const DualVec td = seed_vector(theta, n, nx);
  const DualVec ud = constant_vector(u);
  const Mat top = extract_jacobian(predict_state(xd, ud, td), n);
  Mat a = Mat::Zero(n, n);
  a.topRows(nx) = top;
  a.bottomRightCorner(nt, nt).setIdentity();
  return a;
}

Mat PredictionModel::c_matrix(const Vec& x, const Vec& theta) const {
  const int n = n_state() + n_theta();
  const DualVec xd = seed_vector(x, n, 0);
  const DualVec td = seed_vector(theta, n, n_state());
  return extract_jacobian(predict_output(xd, td), n);
}

PredictionModel::Linearization PredictionModel::linearize(
    const Vec& x, const Vec& u, const Vec& theta) const {
  return {a_matrix(x, u, theta), c_matrix(x, theta)};
}

}  // namespace ofmpc
