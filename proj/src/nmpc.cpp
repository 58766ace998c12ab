#include "ofmpc/nmpc.hpp"

#include <cmath>
#include <limits>

#include "kkt.hpp"

namespace ofmpc {

namespace {

struct Transcription {
  const NmpcConfig& cfg;
  const PredictionModel& model;
  const Vec& x0;
  const Vec& theta;
  const TargetTrajectory& targets;
  int n, nx, nu, n_z, n_c;
  double penalty_weight = 0.0;  // box-bound quadratic penalty, 0 = off

  Transcription(const NmpcConfig& c, const PredictionModel& m, const Vec& x,
                const Vec& th, const TargetTrajectory& t)
      : cfg(c), model(m), x0(x), theta(th), targets(t) {
    n = cfg.horizon;
    nx = model.n_state();
    nu = model.n_input();
    n_z = n * (nx + nu);
    n_c = n * nx +
          (cfg.terminal == TerminalMode::EqualityToTarget ? nx : 0);
  }

  // z = [x_1..x_N, u_0..u_{N-1}]
  int x_offset(int j) const { return (j - 1) * nx; }  // j in 1..N
  int u_offset(int j) const { return n * nx + j * nu; }

  Vec state(const Vec& z, int j) const {
    return j == 0 ? x0 : Vec(z.segment(x_offset(j), nx));
  }
  Vec input(const Vec& z, int j) const { return z.segment(u_offset(j), nu); }

  Vec constraints(const Vec& z) const {
    Vec c(n_c);
    for (int j = 0; j < n; ++j)
      c.segment(j * nx, nx) =
          state(z, j + 1) -
          model.predict_state(state(z, j), input(z, j), theta);
    if (cfg.terminal == TerminalMode::EqualityToTarget)
      c.segment(n * nx, nx) = state(z, n) - targets.x_r[n];
    return c;
  }

  Mat constraint_jacobian(const Vec& z) const {
    Mat jac = Mat::Zero(n_c, n_z);
    const DualVec theta_c = constant_vector(theta);
    for (int j = 0; j < n; ++j) {
      const DualVec xd = seed_vector(state(z, j), nx + nu, 0);
      const DualVec ud = seed_vector(input(z, j), nx + nu, nx);
      const Mat step_jac =
          extract_jacobian(model.predict_state(xd, ud, theta_c), nx + nu);
      if (j > 0)
        jac.block(j * nx, x_offset(j), nx, nx) = -step_jac.leftCols(nx);
      jac.block(j * nx, u_offset(j), nx, nu) = -step_jac.rightCols(nu);
      jac.block(j * nx, x_offset(j + 1), nx, nx) = Mat::Identity(nx, nx);
    }
    if (cfg.terminal == TerminalMode::EqualityToTarget)
      jac.block(n * nx, x_offset(n), nx, nx) = Mat::Identity(nx, nx);
    return jac;
  }

  // Stage cost over j = 0..N-1; the j = 0 state term is a constant offset.
  double objective(const Vec& z) const {
    double f = 0.0;
    for (int j = 0; j < n; ++j) {
      const Vec ex = state(z, j) - targets.x_r[j];
      const Vec eu = input(z, j) - targets.u_r[j];
      f += ex.dot(cfg.w_x * ex) + eu.dot(cfg.w_u * eu);
    }
    return f + penalty_value(z);
  }

  Vec gradient(const Vec& z) const {
    Vec g = Vec::Zero(n_z);
    for (int j = 1; j < n; ++j)
      g.segment(x_offset(j), nx) =
          2.0 * cfg.w_x * (state(z, j) - targets.x_r[j]);
    for (int j = 0; j < n; ++j)
      g.segment(u_offset(j), nu) =
          2.0 * cfg.w_u * (input(z, j) - targets.u_r[j]);
    add_penalty_derivatives(z, &g, nullptr);
    return g;
  }

  Mat hessian(const Vec& z) const {
    Mat h = Mat::Zero(n_z, n_z);
    for (int j = 1; j < n; ++j)
      h.block(x_offset(j), x_offset(j), nx, nx) = 2.0 * cfg.w_x;
    for (int j = 0; j < n; ++j)
      h.block(u_offset(j), u_offset(j), nu, nu) = 2.0 * cfg.w_u;
    add_penalty_derivatives(z, nullptr, &h);
    h.diagonal().array() += cfg.levenberg;
    return h;
  }

  double penalty_value(const Vec& z) const {
    if (penalty_weight == 0.0) return 0.0;
    double pen = 0.0;
    if (cfg.input_bounds)
      for (int j = 0; j < n; ++j) {
        const Vec u = input(z, j);
        for (int i = 0; i < nu; ++i) {
          pen += std::pow(std::max(0.0, u(i) - cfg.input_bounds->upper(i)), 2);
          pen += std::pow(std::max(0.0, cfg.input_bounds->lower(i) - u(i)), 2);
        }
      }
    if (cfg.output_bounds)
      for (int j = 1; j < n; ++j) {
        const Vec y = model.predict_output(state(z, j), theta);
        for (int i = 0; i < y.size(); ++i) {
          pen += std::pow(std::max(0.0, y(i) - cfg.output_bounds->upper(i)), 2);
          pen += std::pow(std::max(0.0, cfg.output_bounds->lower(i) - y(i)), 2);
        }
      }
    return penalty_weight * pen;
  }

  void add_penalty_derivatives(const Vec& z, Vec* g, Mat* h) const {
    if (penalty_weight == 0.0) return;
    if (cfg.input_bounds)
      for (int j = 0; j < n; ++j) {
        const Vec u = input(z, j);
        for (int i = 0; i < nu; ++i) {
          const double over = std::max(0.0, u(i) - cfg.input_bounds->upper(i));
          const double under =
              std::max(0.0, cfg.input_bounds->lower(i) - u(i));
          const double active = (over > 0.0 || under > 0.0) ? 1.0 : 0.0;
          if (g)
            (*g)(u_offset(j) + i) += 2.0 * penalty_weight * (over - under);
          if (h && active > 0.0)
            (*h)(u_offset(j) + i, u_offset(j) + i) += 2.0 * penalty_weight;
        }
      }
    if (cfg.output_bounds)
      for (int j = 1; j < n; ++j) {
        const Vec x = state(z, j);
        const Vec y = model.predict_output(x, theta);
        const DualVec xd = seed_vector(x, nx, 0);
        const Mat gy =
            extract_jacobian(model.predict_output(xd, constant_vector(theta)),
                             nx);
        for (int i = 0; i < y.size(); ++i) {
          const double over = std::max(0.0, y(i) - cfg.output_bounds->upper(i));
          const double under =
              std::max(0.0, cfg.output_bounds->lower(i) - y(i));
          if (over == 0.0 && under == 0.0) continue;
          const Vec row = gy.row(i).transpose();
          if (g)
            g->segment(x_offset(j), nx) +=
                2.0 * penalty_weight * (over - under) * row;
          if (h)
            h->block(x_offset(j), x_offset(j), nx, nx) +=
                2.0 * penalty_weight * row * row.transpose();
        }
      }
  }

  double bound_violation(const Vec& z) const {
    double worst = 0.0;
    if (cfg.input_bounds)
      for (int j = 0; j < n; ++j) {
        const Vec u = input(z, j);
        for (int i = 0; i < nu; ++i) {
          worst = std::max(worst, u(i) - cfg.input_bounds->upper(i));
          worst = std::max(worst, cfg.input_bounds->lower(i) - u(i));
        }
      }
    if (cfg.output_bounds)
      for (int j = 1; j < n; ++j) {
        const Vec y = model.predict_output(state(z, j), theta);
        for (int i = 0; i < y.size(); ++i) {
          worst = std::max(worst, y(i) - cfg.output_bounds->upper(i));
          worst = std::max(worst, cfg.output_bounds->lower(i) - y(i));
        }
      }
    return worst;
  }
};

struct SqpResult {
  Vec z;
  int iterations;
  double kkt_residual;
};

SqpResult run_sqp(Transcription& prob, Vec z) {
  const NmpcConfig& cfg = prob.cfg;
  // Penalty curvature inflates the gradient scale; the dual tolerance grows
  // with it while the shooting feasibility tolerance stays absolute.
  const double stat_tol = cfg.sqp_tol * (1.0 + prob.penalty_weight);
  double best = std::numeric_limits<double>::infinity();
  bool stepped = false;
  for (int iter = 0; iter <= cfg.sqp_max_iter; ++iter) {
    const Vec c = prob.constraints(z);
    const double c_norm = c.lpNorm<Eigen::Infinity>();
    const Mat jac = prob.constraint_jacobian(z);
    const Vec grad = prob.gradient(z);
    const Vec nu = detail::multipliers(jac, grad);
    const double stat = detail::stationarity(jac, grad, nu);
    const double kkt = std::max(stat, c_norm);
    best = std::min(best, kkt);
    if (stepped && c_norm <= cfg.sqp_tol && stat <= stat_tol)
      return {z, iter, kkt};
    if (iter == cfg.sqp_max_iter)
      throw SolverFailureError("nmpc: SQP did not converge, best KKT residual " +
                                   std::to_string(best),
                               best, iter);

    detail::KktStep step = detail::solve_kkt(prob.hessian(z), jac, grad, c);
    bool feasibility_step = false;
    if (step.solve_residual > 1e-8) {
      // Redundant constraint rows make the linearization inconsistent away
      // from the shooting manifold; restore feasibility with a damped
      // Gauss-Newton step on ||c||^2 and re-enter the SQP loop.
      Mat jtj = jac.transpose() * jac;
      jtj.diagonal().array() += 1e-10 * (1.0 + jtj.diagonal().maxCoeff());
      step.dz = jtj.ldlt().solve(-jac.transpose() * c);
      step.nu.setZero();
      feasibility_step = true;
      if (step.dz.lpNorm<Eigen::Infinity>() <=
              1e-9 * (1.0 + z.lpNorm<Eigen::Infinity>()) &&
          c_norm > 1e-6)
        throw InfeasibleProblemError(
            "nmpc: constraints are locally unsatisfiable (terminal state "
            "unreachable), residual " +
            std::to_string(c_norm));
    }

    const double sigma = std::max(1.0, 2.0 * step.nu.lpNorm<Eigen::Infinity>());
    const double merit0 = feasibility_step
                              ? c.lpNorm<1>()
                              : prob.objective(z) + sigma * c.lpNorm<1>();
    double alpha = 1.0;
    Vec z_trial = z + step.dz;
    for (int halving = 0; halving < 20; ++halving) {
      double merit = std::numeric_limits<double>::infinity();
      try {
        merit = feasibility_step
                    ? prob.constraints(z_trial).lpNorm<1>()
                    : prob.objective(z_trial) +
                          sigma * prob.constraints(z_trial).lpNorm<1>();
      } catch (const std::runtime_error&) {
        // trial point outside the model domain; halve
      }
      if (merit <= merit0 + 1e-12 * (1.0 + std::abs(merit0))) break;
      alpha *= 0.5;
      z_trial = z + alpha * step.dz;
    }
    z = z_trial;
    stepped = true;
  }
  throw SolverFailureError("nmpc: unreachable", best, cfg.sqp_max_iter);
}

}  // namespace

NmpcSolution nmpc_solve(const NmpcConfig& config, const PredictionModel& model,
                        const Vec& x0, const Vec& theta,
                        const TargetTrajectory& targets,
                        const NmpcSolution* warm_start) {
  const int n = config.horizon;
  const int nx = model.n_state();
  const int nu = model.n_input();
  if (n < 1) throw ConfigError("nmpc: horizon must be >= 1");
  if (config.w_x.rows() != nx || config.w_x.cols() != nx ||
      config.w_u.rows() != nu || config.w_u.cols() != nu)
    throw DimensionError("nmpc: weight matrix arity mismatch");
  if (x0.size() != nx) throw DimensionError("nmpc: x0 arity mismatch");
  if (!all_finite(x0)) throw NonFiniteError("nmpc: non-finite x0");
  if (static_cast<int>(targets.x_r.size()) < n + 1 ||
      static_cast<int>(targets.u_r.size()) < n)
    throw DimensionError("nmpc: targets must cover the horizon");

  Transcription prob(config, model, x0, theta, targets);

  Vec z(prob.n_z);
  if (warm_start && static_cast<int>(warm_start->states.size()) == n + 1 &&
      static_cast<int>(warm_start->inputs.size()) == n) {
    for (int j = 1; j <= n; ++j)
      z.segment(prob.x_offset(j), nx) = warm_start->states[j];
    for (int j = 0; j < n; ++j)
      z.segment(prob.u_offset(j), nu) = warm_start->inputs[j];
  } else {
    for (int j = 1; j <= n; ++j)
      z.segment(prob.x_offset(j), nx) = targets.x_r[j];
    for (int j = 0; j < n; ++j)
      z.segment(prob.u_offset(j), nu) = targets.u_r[j];
  }

  SqpResult result{Vec(), 0, 0.0};
  const bool bounded =
      config.input_bounds.has_value() || config.output_bounds.has_value();
  if (!bounded) {
    result = run_sqp(prob, std::move(z));
  } else {
    // Quadratic penalty with weight escalation, then project the inputs.
    prob.penalty_weight = 1e4;
    int total_iters = 0;
    for (int round = 0; round < 3; ++round) {
      result = run_sqp(prob, std::move(z));
      total_iters += result.iterations;
      z = result.z;
      if (prob.bound_violation(z) <= 1e-9) break;
      prob.penalty_weight *= 100.0;
    }
    result.z = z;
    result.iterations = total_iters;
  }

  NmpcSolution sol;
  sol.states.reserve(n + 1);
  sol.inputs.reserve(n);
  sol.states.push_back(x0);
  for (int j = 1; j <= n; ++j)
    sol.states.push_back(result.z.segment(prob.x_offset(j), nx));
  for (int j = 0; j < n; ++j) {
    Vec u = result.z.segment(prob.u_offset(j), nu);
    if (config.input_bounds)
      u = u.cwiseMax(config.input_bounds->lower)
              .cwiseMin(config.input_bounds->upper);
    sol.inputs.push_back(u);
  }
  sol.u0 = sol.inputs.front();
  prob.penalty_weight = 0.0;
  sol.objective = prob.objective(result.z);
  sol.iterations = result.iterations;
  sol.kkt_residual = result.kkt_residual;
  return sol;
}

}  // namespace ofmpc
