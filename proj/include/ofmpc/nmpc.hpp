#pragma once

#include <optional>
#include <vector>

#include "ofmpc/model.hpp"
#include "ofmpc/refgen.hpp"

namespace ofmpc {

enum class TerminalMode { EqualityToTarget, None };

struct BoxBounds {
  Vec lower;
  Vec upper;
};

struct NmpcConfig {
  int horizon = 5;
  Mat w_x;  // PSD state weight
  Mat w_u;  // PD input weight
  TerminalMode terminal = TerminalMode::EqualityToTarget;
  std::optional<BoxBounds> input_bounds;
  std::optional<BoxBounds> output_bounds;
  double sqp_tol = 1e-8;
  int sqp_max_iter = 50;
  double levenberg = 1e-8;
};

struct NmpcSolution {
  Vec u0;
  std::vector<Vec> states;  // x_0 .. x_N
  std::vector<Vec> inputs;  // u_0 .. u_{N-1}
  double objective = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// Tracking NMPC over a multiple-shooting transcription: decision variables
/// (x_1..x_N, u_0..u_{N-1}) with x_0 pinned to the current estimate, shooting
/// equalities through the prediction model at the supplied theta, and an
/// optional terminal equality x_N = x_r(N). Solved by equality-constrained
/// Gauss-Newton SQP on the dense KKT system. Box bounds, when configured,
/// are handled by an escalating quadratic penalty and a final projection of
/// the inputs onto the box.
///
/// The warm start is used as the initial iterate as-is; the closed-loop
/// driver shifts the previous solution by one step before passing it.
NmpcSolution nmpc_solve(const NmpcConfig& config, const PredictionModel& model,
                        const Vec& x0, const Vec& theta,
                        const TargetTrajectory& targets,
                        const NmpcSolution* warm_start = nullptr);

}  // namespace ofmpc
