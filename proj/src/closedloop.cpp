#include "ofmpc/closedloop.hpp"

#include <cmath>

namespace ofmpc {

Metrics compute_metrics(const ClosedLoopLog& log, double tail_fraction) {
  if (log.empty()) throw EmptyLogError("metrics: empty log");
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
    throw DomainError("metrics: tail_fraction must be in (0, 1]");
  const int n = log.steps();
  const int tail = std::max(1, static_cast<int>(std::ceil(tail_fraction * n)));
  const int tail_start = n - tail;

  Metrics m;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const LogRecord& rec = log.records[i];
    const double err = (rec.y - rec.r).lpNorm<Eigen::Infinity>();
    sum_sq += (rec.y - rec.r).squaredNorm();
    if (i >= tail_start) {
      m.max_tail_error = std::max(m.max_tail_error, err);
      m.max_tail_innovation =
          std::max(m.max_tail_innovation,
                   rec.innovation.lpNorm<Eigen::Infinity>());
    }
  }
  m.rms_error = std::sqrt(sum_sq / n);
  return m;
}

bool theorem1_consistent(const Metrics& metrics, double gain,
                         double innovation_floor) {
  return metrics.max_tail_error <=
         gain * std::max(metrics.max_tail_innovation, innovation_floor);
}

namespace {

Vec scalar_vec(double v) {
  Vec out(1);
  out(0) = v;
  return out;
}

TerminalMode terminal_from_string(const std::string& name) {
  if (name == "equality") return TerminalMode::EqualityToTarget;
  if (name == "none") return TerminalMode::None;
  throw ConfigError("unknown terminal mode '" + name + "'");
}

}  // namespace

ClosedLoop::ClosedLoop(const Scenario& scenario) : scenario_(scenario) {
  const Scenario& s = scenario_;
  std::shared_ptr<const OdeSystem> model_sys;
  if (s.plant_kind == PlantKind::VanDerPol) {
    plant_ = std::make_shared<VanDerPolSystem>(s.vdp_plant);
    model_sys = std::make_shared<VanDerPolSystem>(s.vdp_model);
  } else {
    plant_ = std::make_shared<CstrSystem>(s.cstr_plant);
    model_sys = std::make_shared<CstrSystem>(s.cstr_model);
  }
  const std::vector<int> output_indices = {1};  // v and C_A respectively

  model_ = std::make_shared<PredictionModel>(model_sys, s.sample_time,
                                             s.substeps, make_disturbance(s),
                                             output_indices);
  plant_as_model_ = std::make_shared<PredictionModel>(
      plant_, s.sample_time, s.substeps, DisturbanceModel::cdm(1),
      output_indices);

  nmpc_.horizon = s.nmpc.horizon;
  nmpc_.w_x = s.nmpc.w_x_diag.asDiagonal();
  nmpc_.w_u = s.nmpc.w_u_diag.asDiagonal();
  nmpc_.terminal = terminal_from_string(s.nmpc.terminal);
  nmpc_.sqp_tol = s.nmpc.sqp_tol;
  nmpc_.sqp_max_iter = s.nmpc.sqp_max_iter;
  nmpc_.input_bounds = s.nmpc.input_bounds;
  nmpc_.output_bounds = s.nmpc.output_bounds;
  preview_ = s.nmpc.horizon + s.refgen.preview_extra;

  // Plant starts at its own steady state for r(0) unless pinned explicitly.
  const Vec r0 = s.reference.at(0);
  if (s.plant_initial_state.size()) {
    plant_state_ = s.plant_initial_state;
  } else {
    Vec x_guess, u_guess;
    const Vec* xg = nullptr;
    const Vec* ug = nullptr;
    if (s.plant_kind == PlantKind::Cstr) {
      x_guess = Vec(2);
      x_guess << s.cstr_plant.feed_temperature + 75.0, r0(0);
      u_guess = scalar_vec(s.cstr_plant.feed_temperature);
      xg = &x_guess;
      ug = &u_guess;
    }
    const SteadyStateTarget ss =
        solve_steady_state(*plant_as_model_, Vec::Zero(1), r0, xg, ug);
    plant_state_ = ss.x_r;
  }

  const Vec y0 = plant_state_(output_indices[0]) * Vec::Ones(1);
  Vec x0 = s.ekf.x0;
  if (x0.size() == 0) {
    x0 = Vec::Zero(model_->n_state());
    x0(output_indices[0]) = y0(0);
  }
  const DisturbanceModel& dist = model_->disturbance();
  const Vec theta0 = s.family == DisturbanceFamily::Fnn
                         ? dist.xavier_init(s.seed)
                         : Vec::Zero(dist.n_theta());
  const int nx = model_->n_state();
  const int nt = dist.n_theta();
  Mat p0 = Mat::Zero(nx + nt, nx + nt);
  p0.topLeftCorner(nx, nx) = s.ekf.p0_x * Mat::Identity(nx, nx);
  p0.bottomRightCorner(nt, nt) = s.ekf.p0_theta * Mat::Identity(nt, nt);
  ekf_ = make_ekf_state(*model_, x0, theta0, p0,
                        s.ekf.q_x * Mat::Identity(nx, nx),
                        s.ekf.q_theta * Mat::Identity(nt, nt),
                        s.ekf.q_y * Mat::Identity(1, 1));

  // Reference input trajectory for the generator cost: either supplied with
  // the signal or derived by solving the same preview problem on the true
  // plant (the trackability assumption made computable).
  if (s.reference.has_nominal_input()) {
    nominal_inputs_ = s.reference.nominal_input;
  } else if (s.reference.kind == ReferenceKind::SampledTrajectory &&
             s.refgen.derive_nominal_input) {
    RefGenOptions options;
    options.tol = s.refgen.tol;
    options.max_iter = s.refgen.max_iter;
    const Vec plant_theta = Vec::Zero(1);
    nominal_inputs_.reserve(s.steps + preview_ + 1);
    for (int k = 0; k <= s.steps + preview_; ++k) {
      RefGenRequest req;
      req.options = options;
      TargetTrajectory shifted;
      if (warm_nominal_) {
        shifted = *warm_nominal_;
        shifted.x_r.erase(shifted.x_r.begin());
        shifted.u_r.erase(shifted.u_r.begin());
        shifted.d_r.erase(shifted.d_r.begin());
        shifted.x_r.push_back(shifted.x_r.back());
        shifted.u_r.push_back(shifted.u_r.back());
        shifted.d_r.push_back(shifted.d_r.back());
        req.warm_start = &shifted;
      } else {
        req.state_guess = &plant_state_;
      }
      const TargetTrajectory sol = solve_preview(
          *plant_as_model_, plant_theta, reference_window(k, preview_ + 1),
          req);
      nominal_inputs_.push_back(sol.u_r.front());
      warm_nominal_ = sol;
    }
  }
}

std::vector<Vec> ClosedLoop::reference_window(int k, int length) const {
  std::vector<Vec> window;
  window.reserve(length);
  for (int j = 0; j < length; ++j) window.push_back(scenario_.reference.at(k + j));
  return window;
}

TargetTrajectory ClosedLoop::targets_for_step(const Vec& theta) {
  const ReferenceSignal& ref = scenario_.reference;
  const int n = nmpc_.horizon;
  RefGenOptions options;
  options.tol = scenario_.refgen.tol;
  options.max_iter = scenario_.refgen.max_iter;

  if (ref.kind == ReferenceKind::PiecewiseConstant) {
    const Vec r = ref.at(k_);
    const Vec* xg = warm_steady_ ? &warm_steady_->x_r : nullptr;
    const Vec* ug = warm_steady_ ? &warm_steady_->u_r : nullptr;
    Vec fallback_guess;
    if (!xg) {
      fallback_guess = ekf_.x_pred;
      xg = &fallback_guess;
    }
    const SteadyStateTarget ss =
        solve_steady_state(*model_, theta, r, xg, ug, options);
    warm_steady_ = ss;
    TargetTrajectory targets;
    targets.x_r.assign(n + 1, ss.x_r);
    targets.u_r.assign(n + 1, ss.u_r);
    targets.d_r.assign(n + 1, ss.d_r);
    targets.residual = ss.residual;
    targets.iterations = ss.iterations;
    return targets;
  }

  if (ref.kind == ReferenceKind::SampledTrajectory) {
    RefGenRequest req;
    req.options = options;
    std::vector<Vec> nominal;
    if (!nominal_inputs_.empty()) {
      nominal.reserve(preview_ + 1);
      const int last = static_cast<int>(nominal_inputs_.size()) - 1;
      for (int j = 0; j <= preview_; ++j)
        nominal.push_back(nominal_inputs_[std::min(k_ + j, last)]);
      req.nominal_input = &nominal;
    }
    TargetTrajectory shifted;
    if (warm_targets_) {
      shifted = *warm_targets_;
      shifted.x_r.erase(shifted.x_r.begin());
      shifted.u_r.erase(shifted.u_r.begin());
      shifted.d_r.erase(shifted.d_r.begin());
      shifted.x_r.push_back(shifted.x_r.back());
      shifted.u_r.push_back(shifted.u_r.back());
      shifted.d_r.push_back(shifted.d_r.back());
      req.warm_start = &shifted;
    } else {
      req.state_guess = &ekf_.x_pred;
    }
    const TargetTrajectory sol =
        solve_preview(*model_, theta, reference_window(k_, preview_ + 1), req);
    warm_targets_ = sol;
    return sol;
  }

  // Periodic: one period solved with the cyclic constraint, phase-aligned at
  // the current step, then unrolled over the horizon.
  const int period = static_cast<int>(ref.samples.size());
  RefGenRequest req;
  req.options = options;
  TargetTrajectory rotated;
  if (warm_targets_) {
    rotated = *warm_targets_;
    std::rotate(rotated.x_r.begin(), rotated.x_r.begin() + 1,
                rotated.x_r.end());
    std::rotate(rotated.u_r.begin(), rotated.u_r.begin() + 1,
                rotated.u_r.end());
    std::rotate(rotated.d_r.begin(), rotated.d_r.begin() + 1,
                rotated.d_r.end());
    req.warm_start = &rotated;
  } else {
    req.state_guess = &ekf_.x_pred;
  }
  const TargetTrajectory sol =
      solve_periodic(*model_, theta, reference_window(k_, period), req);
  warm_targets_ = sol;
  TargetTrajectory targets;
  targets.residual = sol.residual;
  targets.iterations = sol.iterations;
  for (int j = 0; j <= n; ++j) {
    targets.x_r.push_back(sol.x_r[j % period]);
    targets.u_r.push_back(sol.u_r[j % period]);
    targets.d_r.push_back(sol.d_r[j % period]);
  }
  return targets;
}

LogRecord ClosedLoop::step() {
  const int k = k_;
  LogRecord rec;
  rec.k = k;
  rec.t = k * scenario_.sample_time;
  rec.r = scenario_.reference.at(k);
  rec.x_pred = ekf_.x_pred;
  rec.theta_pred = ekf_.theta_pred;

  const int out_idx = model_->output_indices()[0];
  rec.y = scalar_vec(plant_state_(out_idx));

  EkfFiltered filtered;
  try {
    filtered = ekf_measurement_update(ekf_, *model_, rec.y);
  } catch (const std::runtime_error& err) {
    throw RunAbortError(k, "ekf-measurement", err.what());
  }
  rec.innovation = filtered.innovation;
  rec.x_filt = filtered.x;
  rec.theta_filt = filtered.theta;

  TargetTrajectory targets;
  try {
    targets = targets_for_step(filtered.theta);
  } catch (const std::runtime_error& err) {
    throw RunAbortError(k, "refgen", err.what());
  }
  rec.refgen_residual = targets.residual;

  NmpcSolution shifted;
  const NmpcSolution* warm = nullptr;
  if (warm_nmpc_) {
    shifted = *warm_nmpc_;
    const int n = nmpc_.horizon;
    for (int j = 0; j + 1 <= n; ++j) shifted.states[j] = warm_nmpc_->states[j + 1];
    for (int j = 0; j + 1 < n; ++j) shifted.inputs[j] = warm_nmpc_->inputs[j + 1];
    warm = &shifted;
  }
  NmpcSolution sol;
  try {
    sol = nmpc_solve(nmpc_, *model_, filtered.x, filtered.theta, targets,
                     warm);
  } catch (const std::runtime_error& err) {
    throw RunAbortError(k, "nmpc", err.what());
  }
  rec.u = sol.u0;
  rec.nmpc_iterations = sol.iterations;
  rec.nmpc_kkt = sol.kkt_residual;
  warm_nmpc_ = sol;

  try {
    plant_state_ = rk4_step<double>(*plant_, plant_state_, sol.u0, Vec(),
                                    scenario_.sample_time, scenario_.substeps);
  } catch (const std::runtime_error& err) {
    throw RunAbortError(k, "plant", err.what());
  }

  try {
    ekf_ = ekf_time_update(ekf_, filtered, *model_, sol.u0);
  } catch (const std::runtime_error& err) {
    throw RunAbortError(k, "ekf-time", err.what());
  }

  ++k_;
  return rec;
}

ClosedLoopLog ClosedLoop::run() {
  ClosedLoopLog log;
  log.records.reserve(scenario_.steps);
  for (int k = 0; k < scenario_.steps; ++k) log.records.push_back(step());
  return log;
}

ClosedLoopLog run_scenario(const Scenario& scenario) {
  return ClosedLoop(scenario).run();
}

}  // namespace ofmpc
