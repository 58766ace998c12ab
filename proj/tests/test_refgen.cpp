#include <doctest.h>

#include <cmath>
#include <memory>

#include "ofmpc/refgen.hpp"
#include "test_util.hpp"

using namespace ofmpc;

namespace {

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}
Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

PredictionModel vdp_model(VanDerPolParams params, DisturbanceModel dist) {
  return PredictionModel(std::make_shared<VanDerPolSystem>(params), 0.5, 8,
                         std::move(dist), {1});
}

std::vector<Vec> constant_window(double r, int nodes) {
  return std::vector<Vec>(nodes, vec1(r));
}

}  // namespace

TEST_CASE("constant reference with a known nominal input lands on the "
          "analytic equilibrium") {
  // Model identical to the plant, zero theta: holding v = 0.8 needs
  // v' = v'' = 0, hence u = -v/rho = -0.8.
  const PredictionModel model =
      vdp_model({1.0, 1.0, 1.0}, DisturbanceModel::pdm_vanderpol());
  const double r = 0.8;
  const std::vector<Vec> window = constant_window(r, 11);
  const std::vector<Vec> u_nom(11, vec1(-r));
  RefGenRequest req;
  req.nominal_input = &u_nom;
  const TargetTrajectory targets =
      solve_preview(model, Vec::Zero(10), window, req);
  CHECK(targets.residual <= 1e-9);
  for (int j = 0; j <= targets.horizon(); ++j) {
    CHECK(targets.u_r[j](0) == doctest::Approx(-r).epsilon(1e-7));
    CHECK(targets.x_r[j](1) == doctest::Approx(r).epsilon(1e-7));
    CHECK(targets.x_r[j](0) == doctest::Approx(0.0).epsilon(1e-7));
  }
}

TEST_CASE("zero reference solves to the zero trajectory") {
  const PredictionModel model =
      vdp_model({1.0, 1.0, 1.0}, DisturbanceModel::pdm_vanderpol());
  const TargetTrajectory targets =
      solve_preview(model, Vec::Zero(10), constant_window(0.0, 11));
  for (int j = 0; j <= targets.horizon(); ++j) {
    CHECK(targets.x_r[j].lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(targets.u_r[j].lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("pdm at the derived theta yields plant-consistent targets") {
  const PredictionModel model =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::pdm_vanderpol());
  const Vec theta = test::vdp_mismatch_theta({1.0, 1.0, 1.0}, {0.8, 0.9, 0.8});
  std::vector<Vec> window;
  for (int j = 0; j <= 10; ++j)
    window.push_back(vec1(0.8 * std::sin(2.0 * M_PI * 0.5 * j / 40.0) +
                          0.4 * std::sin(2.0 * M_PI * 0.5 * j / 17.0)));
  const TargetTrajectory targets = solve_preview(model, theta, window);
  CHECK(targets.residual <= 1e-9);
  CHECK(target_constraint_residual(model, theta, targets, window, false) <=
        1e-9);

  // Assumption 4 made concrete: the true plant rolled out from x_r(0) under
  // u_r reproduces the reference.
  const VanDerPolSystem plant({1.0, 1.0, 1.0});
  Vec x = targets.x_r[0];
  for (int j = 0; j <= targets.horizon(); ++j) {
    CHECK(std::abs(x(1) - window[j](0)) <= 1e-6);
    if (j < targets.horizon())
      x = rk4_step<double>(plant, x, targets.u_r[j], Vec(), 0.5, 8);
  }
}

TEST_CASE("steady state: nominal van der pol at the origin") {
  const PredictionModel model =
      vdp_model({1.0, 1.0, 1.0}, DisturbanceModel::pdm_vanderpol());
  const SteadyStateTarget ss =
      solve_steady_state(model, Vec::Zero(10), vec1(0.0));
  CHECK(ss.x_r.lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(ss.u_r.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("steady state: mismatched rho changes the equilibrium input") {
  const PredictionModel model =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::pdm_vanderpol());
  const SteadyStateTarget ss =
      solve_steady_state(model, Vec::Zero(10), vec1(1.0));
  CHECK(ss.u_r(0) == doctest::Approx(-1.25).epsilon(1e-9));
  CHECK(ss.x_r(1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("steady state: cdm shifts the nominal output by theta") {
  const PredictionModel model =
      vdp_model({1.0, 1.0, 1.0}, DisturbanceModel::cdm(1));
  const double delta = 0.25, r = 1.0;
  const SteadyStateTarget ss = solve_steady_state(model, vec1(delta), vec1(r));
  CHECK(ss.x_r(1) == doctest::Approx(r - delta).epsilon(1e-9));
  CHECK(ss.d_r(0) == doctest::Approx(delta));
}

TEST_CASE("periodic: a one-sample period reduces to the steady state") {
  const PredictionModel model =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::pdm_vanderpol());
  const Vec theta = Vec::Zero(10);
  const TargetTrajectory per =
      solve_periodic(model, theta, constant_window(0.6, 1));
  const SteadyStateTarget ss = solve_steady_state(model, theta, vec1(0.6));
  CHECK((per.x_r[0] - ss.x_r).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((per.u_r[0] - ss.u_r).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("periodic solutions close on themselves") {
  const PredictionModel model =
      vdp_model({1.0, 1.0, 1.0}, DisturbanceModel::pdm_vanderpol());
  const int period = 16;
  std::vector<Vec> window;
  for (int j = 0; j < period; ++j)
    window.push_back(vec1(0.5 * std::sin(2.0 * M_PI * j / period)));
  const TargetTrajectory per = solve_periodic(model, Vec::Zero(10), window);
  CHECK(per.residual <= 1e-9);
  Vec x = per.x_r[0];
  for (int j = 0; j < period; ++j)
    x = model.predict_state<double>(x, per.u_r[j], Vec::Zero(10));
  CHECK((x - per.x_r[0]).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("periodic zero reference is the zero trajectory") {
  const PredictionModel model =
      vdp_model({1.0, 1.0, 1.0}, DisturbanceModel::pdm_vanderpol());
  const TargetTrajectory per =
      solve_periodic(model, Vec::Zero(10), constant_window(0.0, 8));
  for (const Vec& x : per.x_r) CHECK(x.lpNorm<Eigen::Infinity>() < 1e-9);
  for (const Vec& u : per.u_r) CHECK(u.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("warm-started resolve of an unchanged problem is a fixed point") {
  const PredictionModel model =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::pdm_vanderpol());
  const Vec theta = 0.1 * Vec::Ones(10);
  const std::vector<Vec> window = constant_window(0.5, 11);
  const TargetTrajectory first = solve_preview(model, theta, window);
  RefGenRequest req;
  req.warm_start = &first;  // constant window: the shift is the identity
  const TargetTrajectory second = solve_preview(model, theta, window, req);
  for (int j = 0; j <= first.horizon(); ++j) {
    CHECK((first.x_r[j] - second.x_r[j]).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK((first.u_r[j] - second.u_r[j]).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("targets satisfy the defining constraints after every solve") {
  const PredictionModel model =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::pdm_vanderpol());
  const Vec theta = test::vdp_mismatch_theta({1.0, 1.0, 1.0}, {0.8, 0.9, 0.8});
  std::vector<Vec> window;
  for (int j = 0; j <= 12; ++j) window.push_back(vec1(0.3 + 0.05 * j));
  const TargetTrajectory targets = solve_preview(model, theta, window);
  CHECK(target_constraint_residual(model, theta, targets, window, false) <=
        1e-9);
}

TEST_CASE("an exhausted iteration budget raises an infeasible-reference "
          "error with the best residual") {
  const PredictionModel model =
      vdp_model({1.0, 1.0, 1.0}, DisturbanceModel::pdm_vanderpol());
  std::vector<Vec> window;
  for (int j = 0; j <= 10; ++j) window.push_back(vec1(j % 2 ? 2.0 : -2.0));
  RefGenRequest req;
  req.options.max_iter = 1;
  CHECK_THROWS_AS((void)solve_preview(model, Vec::Zero(10), window, req),
                  InfeasibleReferenceError);
  try {
    (void)solve_preview(model, Vec::Zero(10), window, req);
  } catch (const InfeasibleReferenceError& err) {
    CHECK(err.best_residual > 0.0);
  }
}

TEST_CASE("reference signal indexing per kind") {
  ReferenceSignal pwc;
  pwc.kind = ReferenceKind::PiecewiseConstant;
  pwc.samples = {vec1(0.5), vec1(1.5), vec1(-1.0), vec1(0.8)};
  pwc.segment_length = 50;
  CHECK(pwc.at(0)(0) == 0.5);
  CHECK(pwc.at(49)(0) == 0.5);
  CHECK(pwc.at(50)(0) == 1.5);
  CHECK(pwc.at(199)(0) == 0.8);
  CHECK(pwc.at(200)(0) == 0.5);  // wraps cyclically

  ReferenceSignal sampled;
  sampled.kind = ReferenceKind::SampledTrajectory;
  sampled.samples = {vec1(0.0), vec1(1.0), vec1(2.0)};
  CHECK(sampled.at(1)(0) == 1.0);
  CHECK(sampled.at(7)(0) == 2.0);  // holds the last sample

  ReferenceSignal periodic;
  periodic.kind = ReferenceKind::Periodic;
  periodic.samples = {vec1(0.0), vec1(1.0)};
  CHECK(periodic.at(0)(0) == periodic.at(2)(0));
  CHECK(periodic.at(1)(0) == periodic.at(3)(0));
}
