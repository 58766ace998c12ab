#pragma once

#include <vector>

#include "ofmpc/model.hpp"

namespace ofmpc {

enum class ReferenceKind { PiecewiseConstant, SampledTrajectory, Periodic };

std::string to_string(ReferenceKind kind);
ReferenceKind reference_kind_from_string(const std::string& name);

/// Output reference with optional preview extension rules: piecewise-constant
/// levels repeat cyclically, sampled trajectories hold their last value, and
/// periodic signals wrap with period samples.size().
struct ReferenceSignal {
  ReferenceKind kind = ReferenceKind::SampledTrajectory;
  std::vector<Vec> samples;
  int segment_length = 1;  // piecewise-constant only
  // Input trajectory known to reproduce the reference on the plant, when
  // available; anchors the reference-generator cost.
  std::vector<Vec> nominal_input;

  Vec at(int k) const;
  bool has_nominal_input() const { return !nominal_input.empty(); }
  Vec nominal_input_at(int k) const;
};

/// Consistent (x_r, u_r, d_r) triples over a preview window (or one period),
/// each satisfying output, dynamics, and disturbance constraints at the
/// theta used for the solve. d_r stacks (d_x; d_y).
struct TargetTrajectory {
  std::vector<Vec> x_r;
  std::vector<Vec> u_r;
  std::vector<Vec> d_r;
  double residual = 0.0;
  int iterations = 0;

  int horizon() const { return static_cast<int>(x_r.size()) - 1; }
};

struct RefGenOptions {
  double tol = 1e-9;
  int max_iter = 50;
  double levenberg = 1e-9;
  // Fallback cost weight on states when no nominal input is available.
  double state_weight = 1e-6;
};

struct RefGenRequest {
  const std::vector<Vec>* nominal_input = nullptr;  // aligned with r window
  const TargetTrajectory* warm_start = nullptr;     // already shifted by caller
  const Vec* state_guess = nullptr;                 // cold-start lift helper
  RefGenOptions options;
};

/// Gauss-Newton solve of the preview-truncated reference problem over
/// j = 0..M where M = r_preview.size() - 1: minimize the input tracking cost
/// subject to exact output matching and model dynamics with d = h(., theta).
TargetTrajectory solve_preview(const PredictionModel& model, const Vec& theta,
                               const std::vector<Vec>& r_preview,
                               const RefGenRequest& request = {});

struct SteadyStateTarget {
  Vec x_r;
  Vec u_r;
  Vec d_r;
  double residual = 0.0;
  int iterations = 0;
};

/// Newton solve of the square steady-state system r = g, x = f(x, u, d),
/// d = h(x, u, theta). Requires as many inputs as outputs.
SteadyStateTarget solve_steady_state(const PredictionModel& model,
                                     const Vec& theta, const Vec& r,
                                     const Vec* x_guess = nullptr,
                                     const Vec* u_guess = nullptr,
                                     const RefGenOptions& options = {});

/// Periodic variant over one period of r: dynamics constraints wrap so that
/// the solved state trajectory is T-cyclic.
TargetTrajectory solve_periodic(const PredictionModel& model, const Vec& theta,
                                const std::vector<Vec>& r_period,
                                const RefGenRequest& request = {});

/// Max constraint violation of a candidate target trajectory at theta;
/// direct residual evaluation used after every solve and in tests.
double target_constraint_residual(const PredictionModel& model,
                                  const Vec& theta,
                                  const TargetTrajectory& targets,
                                  const std::vector<Vec>& r, bool cyclic);

}  // namespace ofmpc
