#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ofmpc/ekf.hpp"
#include "ofmpc/nmpc.hpp"
#include "ofmpc/refgen.hpp"
#include "ofmpc/scenario.hpp"

namespace ofmpc {

struct LogRecord {
  int k = 0;
  double t = 0.0;
  Vec r;
  Vec y;
  Vec innovation;
  Vec u;
  Vec x_filt;      // x(k|k)
  Vec theta_filt;  // theta(k|k)
  int nmpc_iterations = 0;
  double nmpc_kkt = 0.0;
  double refgen_residual = 0.0;
  // Prediction-side snapshots kept for observer consistency checks; not part
  // of the CSV contract.
  Vec x_pred;
  Vec theta_pred;
};

struct ClosedLoopLog {
  std::vector<LogRecord> records;

  bool empty() const { return records.empty(); }
  int steps() const { return static_cast<int>(records.size()); }
};

struct Metrics {
  double rms_error = 0.0;
  double max_tail_error = 0.0;
  double max_tail_innovation = 0.0;
};

/// rms of |y - r| over the whole log plus tail maxima of tracking error and
/// innovation over the final tail_fraction of steps.
Metrics compute_metrics(const ClosedLoopLog& log, double tail_fraction);

/// Small tail innovation should imply small tail tracking error; a violation
/// of max_tail_error <= gain * max(max_tail_innovation, floor) indicates the
/// disturbance model cannot represent the plant along this trajectory.
bool theorem1_consistent(const Metrics& metrics, double gain,
                         double innovation_floor = 1e-9);

/// Aborted runs carry the step index and the component that failed.
struct RunAbortError : std::runtime_error {
  RunAbortError(int step, const std::string& component,
                const std::string& message)
      : std::runtime_error("step " + std::to_string(step) + " [" + component +
                           "]: " + message),
        step(step),
        component(component) {}
  int step;
  std::string component;
};

/// Plant, joint EKF, reference generator, and NMPC stepped in measurement ->
/// estimate -> targets -> control -> plant -> time-update order, so the
/// controller always acts on x(k|k), theta(k|k).
class ClosedLoop {
 public:
  explicit ClosedLoop(const Scenario& scenario);

  LogRecord step();
  ClosedLoopLog run();

  int current_step() const { return k_; }
  const EkfState& ekf_state() const { return ekf_; }
  const PredictionModel& model() const { return *model_; }
  const OdeSystem& plant() const { return *plant_; }
  const Vec& plant_state() const { return plant_state_; }
  const Scenario& scenario() const { return scenario_; }

 private:
  TargetTrajectory targets_for_step(const Vec& theta);
  std::vector<Vec> reference_window(int k, int length) const;

  Scenario scenario_;
  std::shared_ptr<const OdeSystem> plant_;
  std::shared_ptr<PredictionModel> model_;
  std::shared_ptr<PredictionModel> plant_as_model_;  // Assumption-1 pre-pass
  NmpcConfig nmpc_;
  EkfState ekf_;
  Vec plant_state_;
  int k_ = 0;
  int preview_;  // M
  std::vector<Vec> nominal_inputs_;  // u_r(k), plant-derived when configured
  std::optional<TargetTrajectory> warm_targets_;
  std::optional<TargetTrajectory> warm_nominal_;
  std::optional<SteadyStateTarget> warm_steady_;
  std::optional<NmpcSolution> warm_nmpc_;
};

ClosedLoopLog run_scenario(const Scenario& scenario);

}  // namespace ofmpc
