#include "ofmpc/refgen.hpp"

#include <cmath>
#include <utility>

#include "kkt.hpp"

namespace ofmpc {

std::string to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::PiecewiseConstant: return "piecewise-constant";
    case ReferenceKind::SampledTrajectory: return "sampled-trajectory";
    case ReferenceKind::Periodic: return "periodic";
  }
  return "?";
}

ReferenceKind reference_kind_from_string(const std::string& name) {
  if (name == "piecewise-constant") return ReferenceKind::PiecewiseConstant;
  if (name == "sampled-trajectory") return ReferenceKind::SampledTrajectory;
  if (name == "periodic") return ReferenceKind::Periodic;
  throw ConfigError("unknown reference kind '" + name + "'");
}

Vec ReferenceSignal::at(int k) const {
  if (samples.empty()) throw ConfigError("reference signal has no samples");
  if (k < 0) k = 0;
  const int n = static_cast<int>(samples.size());
  switch (kind) {
    case ReferenceKind::PiecewiseConstant:
      return samples[(k / std::max(1, segment_length)) % n];
    case ReferenceKind::SampledTrajectory:
      return samples[std::min(k, n - 1)];
    case ReferenceKind::Periodic:
      return samples[k % n];
  }
  return samples.front();
}

Vec ReferenceSignal::nominal_input_at(int k) const {
  if (nominal_input.empty())
    throw ConfigError("reference signal has no nominal input");
  const int n = static_cast<int>(nominal_input.size());
  return nominal_input[std::min(std::max(k, 0), n - 1)];
}

namespace {

struct StackedProblem {
  const PredictionModel& model;
  const Vec& theta;
  const std::vector<Vec>& r;  // one sample per node
  bool cyclic;                // dynamics constraint wraps at the last node
  int nodes;
  int nx, nu, p;
  int n_z;  // nodes*(nx+nu)
  int n_c;  // nodes*p + n_dyn*nx

  StackedProblem(const PredictionModel& m, const Vec& th,
                 const std::vector<Vec>& r_window, bool cyc)
      : model(m),
        theta(th),
        r(r_window),
        cyclic(cyc),
        nodes(static_cast<int>(r_window.size())),
        nx(m.n_state()),
        nu(m.n_input()),
        p(m.n_output()) {
    n_z = nodes * (nx + nu);
    n_c = nodes * p + n_dyn() * nx;
  }

  int n_dyn() const { return cyclic ? nodes : nodes - 1; }
  int x_offset(int j) const { return j * nx; }
  int u_offset(int j) const { return nodes * nx + j * nu; }

  Vec state(const Vec& z, int j) const { return z.segment(x_offset(j), nx); }
  Vec input(const Vec& z, int j) const { return z.segment(u_offset(j), nu); }

  Vec constraints(const Vec& z) const {
    Vec c(n_c);
    for (int j = 0; j < nodes; ++j)
      c.segment(j * p, p) = model.predict_output(state(z, j), theta) - r[j];
    for (int j = 0; j < n_dyn(); ++j) {
      const int next = (j + 1) % nodes;
      c.segment(nodes * p + j * nx, nx) =
          state(z, next) - model.predict_state(state(z, j), input(z, j), theta);
    }
    return c;
  }

  Mat constraint_jacobian(const Vec& z) const {
    Mat jac = Mat::Zero(n_c, n_z);
    const DualVec theta_c = constant_vector(theta);
    for (int j = 0; j < nodes; ++j) {
      const DualVec xd = seed_vector(state(z, j), nx, 0);
      jac.block(j * p, x_offset(j), p, nx) =
          extract_jacobian(model.predict_output(xd, theta_c), nx);
    }
    for (int j = 0; j < n_dyn(); ++j) {
      const int next = (j + 1) % nodes;
      const DualVec xd = seed_vector(state(z, j), nx + nu, 0);
      const DualVec ud = seed_vector(input(z, j), nx + nu, nx);
      const Mat step_jac =
          extract_jacobian(model.predict_state(xd, ud, theta_c), nx + nu);
      const int row = nodes * p + j * nx;
      jac.block(row, x_offset(j), nx, nx) = -step_jac.leftCols(nx);
      jac.block(row, u_offset(j), nx, nu) = -step_jac.rightCols(nu);
      jac.block(row, x_offset(next), nx, nx) += Mat::Identity(nx, nx);
    }
    return jac;
  }
};

struct QuadraticCost {
  Vec z_ref;
  Vec weights;  // diagonal of H/2

  double value(const Vec& z) const {
    return weights.cwiseProduct((z - z_ref).cwiseAbs2()).sum();
  }
  Vec gradient(const Vec& z) const {
    return 2.0 * weights.cwiseProduct(z - z_ref);
  }
  Mat hessian() const { return (2.0 * weights).asDiagonal(); }
};

QuadraticCost make_cost(const StackedProblem& prob,
                        const std::vector<Vec>* nominal_input,
                        const RefGenOptions& options) {
  QuadraticCost cost;
  cost.z_ref = Vec::Zero(prob.n_z);
  cost.weights = Vec::Zero(prob.n_z);
  for (int j = 0; j < prob.nodes; ++j) {
    cost.weights.segment(prob.u_offset(j), prob.nu).setOnes();
    if (nominal_input) {
      const auto& u_nom = (*nominal_input)[std::min<std::size_t>(
          j, nominal_input->size() - 1)];
      if (u_nom.size() != prob.nu)
        throw DimensionError("refgen: nominal input arity mismatch");
      cost.z_ref.segment(prob.u_offset(j), prob.nu) = u_nom;
    } else {
      cost.weights.segment(prob.x_offset(j), prob.nx)
          .setConstant(options.state_weight);
    }
  }
  return cost;
}

Vec initial_guess(const StackedProblem& prob,
                  const std::vector<Vec>* nominal_input,
                  const TargetTrajectory* warm, const Vec* state_guess) {
  Vec z = Vec::Zero(prob.n_z);
  if (warm) {
    if (static_cast<int>(warm->x_r.size()) != prob.nodes ||
        static_cast<int>(warm->u_r.size()) != prob.nodes)
      throw DimensionError("refgen: warm start length mismatch");
    for (int j = 0; j < prob.nodes; ++j) {
      z.segment(prob.x_offset(j), prob.nx) = warm->x_r[j];
      z.segment(prob.u_offset(j), prob.nu) = warm->u_r[j];
    }
    return z;
  }
  for (int j = 0; j < prob.nodes; ++j) {
    Vec x = state_guess ? *state_guess : Vec::Zero(prob.nx);
    const auto& sel = prob.model.output_indices();
    for (std::size_t i = 0; i < sel.size(); ++i) x(sel[i]) = prob.r[j](i);
    z.segment(prob.x_offset(j), prob.nx) = x;
    if (nominal_input)
      z.segment(prob.u_offset(j), prob.nu) = (*nominal_input)[std::min<
          std::size_t>(j, nominal_input->size() - 1)];
  }
  return z;
}

TargetTrajectory pack_solution(const StackedProblem& prob, const Vec& z,
                               double residual, int iterations) {
  TargetTrajectory out;
  out.residual = residual;
  out.iterations = iterations;
  out.x_r.reserve(prob.nodes);
  out.u_r.reserve(prob.nodes);
  out.d_r.reserve(prob.nodes);
  for (int j = 0; j < prob.nodes; ++j) {
    const Vec x = prob.state(z, j);
    const Vec u = prob.input(z, j);
    const Vec dx = prob.model.disturbance().eval_hx(x, u, prob.theta);
    const Vec dy = prob.model.disturbance().eval_hy(x, prob.theta);
    Vec d(dx.size() + dy.size());
    d << dx, dy;
    out.x_r.push_back(x);
    out.u_r.push_back(u);
    out.d_r.push_back(d);
  }
  return out;
}

TargetTrajectory solve_stacked(const StackedProblem& prob,
                               const RefGenRequest& request) {
  const RefGenOptions& opt = request.options;
  for (const Vec& sample : prob.r)
    if (!all_finite(sample))
      throw NonFiniteError("refgen: non-finite reference sample");

  const QuadraticCost cost = make_cost(prob, request.nominal_input, opt);
  Vec z = initial_guess(prob, request.nominal_input, request.warm_start,
                        request.state_guess);
  Mat h = cost.hessian();
  h.diagonal().array() += opt.levenberg;

  double best_violation = std::numeric_limits<double>::infinity();
  bool stepped = false;
  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    const Vec c = prob.constraints(z);
    const double violation = c.lpNorm<Eigen::Infinity>();
    best_violation = std::min(best_violation, violation);
    const Mat jac = prob.constraint_jacobian(z);
    const Vec grad = cost.gradient(z);
    const Vec nu = detail::multipliers(jac, grad);
    const double stat = detail::stationarity(jac, grad, nu);
    const double stat_tol = 1e-7 * (1.0 + grad.lpNorm<Eigen::Infinity>());
    if (stepped && violation <= opt.tol && stat <= stat_tol)
      return pack_solution(prob, z, violation, iter);
    if (iter == opt.max_iter) {
      if (violation <= opt.tol)  // feasible, cost stationarity marginal
        return pack_solution(prob, z, violation, iter);
      throw InfeasibleReferenceError(
          "refgen: constraint residual " + std::to_string(best_violation) +
              " above tolerance after " + std::to_string(opt.max_iter) +
              " iterations",
          best_violation);
    }

    const detail::KktStep step = detail::solve_kkt(h, jac, grad, c);
    const double sigma =
        std::max(1.0, 2.0 * step.nu.lpNorm<Eigen::Infinity>());
    const double merit0 = cost.value(z) + sigma * c.lpNorm<1>();
    double alpha = 1.0;
    Vec z_trial = z + step.dz;
    for (int halving = 0; halving < 20; ++halving) {
      double merit_trial = std::numeric_limits<double>::infinity();
      try {
        merit_trial = cost.value(z_trial) +
                      sigma * prob.constraints(z_trial).lpNorm<1>();
      } catch (const std::runtime_error&) {
        // out-of-domain trial point, keep halving
      }
      if (merit_trial <= merit0 + 1e-12 * (1.0 + std::abs(merit0))) break;
      alpha *= 0.5;
      z_trial = z + alpha * step.dz;
    }
    z = z_trial;
    stepped = true;
  }
  throw InfeasibleReferenceError("refgen: unreachable", best_violation);
}

}  // namespace

TargetTrajectory solve_preview(const PredictionModel& model, const Vec& theta,
                               const std::vector<Vec>& r_preview,
                               const RefGenRequest& request) {
  if (r_preview.size() < 2)
    throw DimensionError("solve_preview: need at least two preview samples");
  StackedProblem prob(model, theta, r_preview, /*cyclic=*/false);
  return solve_stacked(prob, request);
}

TargetTrajectory solve_periodic(const PredictionModel& model, const Vec& theta,
                                const std::vector<Vec>& r_period,
                                const RefGenRequest& request) {
  if (r_period.empty())
    throw DimensionError("solve_periodic: empty period");
  StackedProblem prob(model, theta, r_period, /*cyclic=*/true);
  return solve_stacked(prob, request);
}

SteadyStateTarget solve_steady_state(const PredictionModel& model,
                                     const Vec& theta, const Vec& r,
                                     const Vec* x_guess, const Vec* u_guess,
                                     const RefGenOptions& options) {
  const int nx = model.n_state();
  const int nu = model.n_input();
  const int p = model.n_output();
  if (r.size() != p)
    throw DimensionError("solve_steady_state: reference arity mismatch");
  if (p != nu)
    throw ConfigError(
        "solve_steady_state: square system needs n_input == n_output");

  Vec x = x_guess ? *x_guess : Vec::Zero(nx);
  if (!x_guess) {
    const auto& sel = model.output_indices();
    for (std::size_t i = 0; i < sel.size(); ++i) x(sel[i]) = r(i);
  }
  Vec u = u_guess ? *u_guess : Vec::Zero(nu);

  auto residual = [&](const Vec& xs, const Vec& us) {
    Vec f(p + nx);
    f.head(p) = model.predict_output(xs, theta) - r;
    f.tail(nx) = xs - model.predict_state(xs, us, theta);
    return f;
  };

  double best = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter <= options.max_iter; ++iter) {
    const Vec f = residual(x, u);
    const double norm = f.lpNorm<Eigen::Infinity>();
    best = std::min(best, norm);
    if (norm <= options.tol) {
      SteadyStateTarget out;
      out.x_r = x;
      out.u_r = u;
      const Vec dx = model.disturbance().eval_hx(x, u, theta);
      const Vec dy = model.disturbance().eval_hy(x, theta);
      out.d_r.resize(dx.size() + dy.size());
      out.d_r << dx, dy;
      out.residual = norm;
      out.iterations = iter;
      return out;
    }
    if (iter == options.max_iter) break;

    const int n = nx + nu;
    const DualVec xd = seed_vector(x, n, 0);
    const DualVec ud = seed_vector(u, n, nx);
    const DualVec td = constant_vector(theta);
    Mat jac(p + nx, n);
    jac.topRows(p) = extract_jacobian(model.predict_output(xd, td), n);
    DualVec dyn(nx);
    const DualVec step = model.predict_state(xd, ud, td);
    for (int i = 0; i < nx; ++i) dyn(i) = xd(i) - step(i);
    jac.bottomRows(nx) = extract_jacobian(dyn, n);

    const Vec dw = jac.completeOrthogonalDecomposition().solve(-f);
    double alpha = 1.0;
    for (int halving = 0; halving < 30; ++halving) {
      try {
        const Vec f_trial =
            residual(x + alpha * dw.head(nx), u + alpha * dw.tail(nu));
        if (f_trial.squaredNorm() <= f.squaredNorm() * (1.0 - 1e-4 * alpha) ||
            f_trial.lpNorm<Eigen::Infinity>() <= options.tol)
          break;
      } catch (const std::runtime_error&) {
      }
      alpha *= 0.5;
    }
    x += alpha * dw.head(nx);
    u += alpha * dw.tail(nu);
  }
  throw NoSteadyStateError(
      "solve_steady_state: Newton stalled at residual " + std::to_string(best),
      best);
}

double target_constraint_residual(const PredictionModel& model,
                                  const Vec& theta,
                                  const TargetTrajectory& targets,
                                  const std::vector<Vec>& r, bool cyclic) {
  const int nodes = static_cast<int>(targets.x_r.size());
  if (nodes == 0 || targets.u_r.size() != targets.x_r.size() ||
      r.size() < targets.x_r.size())
    throw DimensionError("target_constraint_residual: inconsistent lengths");
  double worst = 0.0;
  const int n_dyn = cyclic ? nodes : nodes - 1;
  for (int j = 0; j < nodes; ++j) {
    const Vec out_err =
        model.predict_output(targets.x_r[j], theta) - r[j];
    worst = std::max(worst, out_err.lpNorm<Eigen::Infinity>());
    const Vec dx = model.disturbance().eval_hx(targets.x_r[j], targets.u_r[j],
                                               theta);
    const Vec dy = model.disturbance().eval_hy(targets.x_r[j], theta);
    Vec d(dx.size() + dy.size());
    d << dx, dy;
    if (j < static_cast<int>(targets.d_r.size()) &&
        targets.d_r[j].size() == d.size())
      worst = std::max(worst,
                       (d - targets.d_r[j]).lpNorm<Eigen::Infinity>());
  }
  for (int j = 0; j < n_dyn; ++j) {
    const int next = (j + 1) % nodes;
    const Vec dyn_err =
        targets.x_r[next] -
        model.predict_state(targets.x_r[j], targets.u_r[j], theta);
    worst = std::max(worst, dyn_err.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace ofmpc
