#include <doctest.h>

#include <cmath>
#include <random>

#include "ofmpc/disturbance.hpp"
#include "test_util.hpp"

using namespace ofmpc;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

}  // namespace

TEST_CASE("cdm is the identity in theta on the output channel") {
  const DisturbanceModel m = DisturbanceModel::cdm(1);
  CHECK(m.n_dx() == 0);
  CHECK(m.n_dy() == 1);
  CHECK(m.param_count() == 1);
  CHECK(m.eval_hx<double>(vec2(1.0, 2.0), vec1(0.5), vec1(0.7)).size() == 0);
  CHECK(m.eval_hy<double>(vec2(1.0, 2.0), vec1(0.7))(0) == 0.7);
  CHECK(m.eval_hy<double>(vec2(-3.0, 9.0), vec1(0.0))(0) == 0.0);
}

TEST_CASE("pdm with zero parameters vanishes") {
  const DisturbanceModel m = DisturbanceModel::pdm_vanderpol();
  CHECK(m.param_count() == 10);
  CHECK(m.n_dy() == 0);
  const Vec d = m.eval_hx<double>(vec2(0.7, -1.3), vec1(2.0), Vec::Zero(10));
  CHECK(d.size() == 1);
  CHECK(d(0) == 0.0);
  CHECK(m.eval_hy<double>(vec2(0.7, -1.3), Vec::Zero(10)).size() == 0);
}

TEST_CASE("pdm reproduces the plant/model mismatch at the derived theta") {
  const DisturbanceModel m = DisturbanceModel::pdm_vanderpol();
  const Vec theta = test::vdp_mismatch_theta({1.0, 1.0, 1.0}, {0.8, 0.9, 0.8});
  CHECK(theta(1) == doctest::Approx(0.2));
  CHECK(theta(7) == doctest::Approx(-0.28));
  CHECK(theta(9) == doctest::Approx(-0.2));
  const Vec d = m.eval_hx<double>(vec2(1.0, 1.0), vec1(1.0), theta);
  CHECK(d(0) == doctest::Approx(0.2 - 0.28 - 0.2).epsilon(1e-14));
}

TEST_CASE("pdm is exactly linear in theta") {
  const DisturbanceModel m = DisturbanceModel::pdm_vanderpol();
  std::mt19937 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = test::random_vec(gen, 2);
    const Vec u = test::random_vec(gen, 1);
    const Vec t1 = test::random_vec(gen, 10);
    const Vec t2 = test::random_vec(gen, 10);
    const double a = 1.7, b = -0.4;
    const Vec lhs = m.eval_hx<double>(x, u, a * t1 + b * t2);
    const Vec rhs = a * m.eval_hx<double>(x, u, t1) +
                    b * m.eval_hx<double>(x, u, t2);
    // linear in theta by construction; difference is pure rounding
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("fnn parameter counts match the architecture") {
  const DisturbanceModel vdp = DisturbanceModel::fnn_default(2, 1, 1);
  CHECK(vdp.param_count() == 97);  // 80 for h_x (3-6-6-2), 17 for h_y (2-4-1)
  CHECK(vdp.n_dx() == 2);
  CHECK(vdp.n_dy() == 1);
  const DisturbanceModel cstr = DisturbanceModel::fnn_default(2, 1, 1);
  CHECK(cstr.param_count() == 97);
  CHECK(DisturbanceModel::pdm_cstr(CstrParams{}).param_count() == 7);
}

TEST_CASE("fnn with all-zero parameters matches the layer oracle") {
  const DisturbanceModel m = DisturbanceModel::fnn_default(2, 1, 1);
  const Vec theta = Vec::Zero(97);
  const Vec x = vec2(0.4, -0.2);
  const Vec u = vec1(0.3);
  Vec in(3);
  in << x, u;
  const Vec expected = test::fnn_oracle({3, 6, 6, 2}, theta, 0, in,
                                        Vec::Ones(2));
  const Vec got = m.eval_hx<double>(x, u, theta);
  CHECK((got - expected).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(got.isZero(0.0));  // zero output weights and biases
}

TEST_CASE("fnn forward pass matches the layer oracle on a seeded theta") {
  const DisturbanceModel m = DisturbanceModel::fnn_default(2, 1, 1);
  const Vec theta = m.xavier_init(123);
  const Vec x = vec2(0.5, -0.3);

  const Vec got_hy = m.eval_hy<double>(x, theta);
  const Vec expect_hy = test::fnn_oracle({2, 4, 1}, theta,
                                         fnn_parameter_count({3, 6, 6, 2}), x,
                                         Vec::Ones(1));
  CHECK((got_hy - expect_hy).lpNorm<Eigen::Infinity>() < 1e-12);

  Vec in(3);
  in << 0.5, -0.3, 0.9;
  const Vec got_hx = m.eval_hx<double>(x, vec1(0.9), theta);
  const Vec expect_hx = test::fnn_oracle({3, 6, 6, 2}, theta, 0, in,
                                         Vec::Ones(2));
  CHECK((got_hx - expect_hx).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("fnn input normalization shifts and scales the arguments") {
  FnnArchitecture arch;
  arch.hx_layers = {3, 6, 6, 2};
  arch.hy_layers = {2, 4, 1};
  arch.in_offset = Vec::Zero(3);
  arch.in_scale = Vec::Ones(3);
  arch.in_offset << 370.0, 2.0, 300.0;
  arch.in_scale << 50.0, 1.0, 20.0;
  const DisturbanceModel m = DisturbanceModel::fnn(arch);
  const Vec theta = m.xavier_init(5);
  const Vec raw = m.eval_hx<double>(vec2(370.0 + 50.0, 2.0 + 1.0),
                                    vec1(300.0 + 20.0), theta);
  const DisturbanceModel plain = DisturbanceModel::fnn_default(2, 1, 1);
  const Vec unit = plain.eval_hx<double>(vec2(1.0, 1.0), vec1(1.0), theta);
  CHECK((raw - unit).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("xavier initialization: zero biases, bounded weights, determinism") {
  const DisturbanceModel m = DisturbanceModel::fnn_default(2, 1, 1);
  const Vec t1 = m.xavier_init(77);
  const Vec t2 = m.xavier_init(77);
  CHECK((t1 - t2).lpNorm<Eigen::Infinity>() == 0.0);
  const Vec t3 = m.xavier_init(78);
  CHECK((t1 - t3).lpNorm<Eigen::Infinity>() > 0.0);

  // layout: per layer weights then biases; check every bias is exactly zero
  // and every weight respects the fan bound of its layer.
  const std::vector<std::vector<int>> nets = {{3, 6, 6, 2}, {2, 4, 1}};
  int idx = 0;
  for (const auto& layers : nets) {
    for (std::size_t l = 1; l < layers.size(); ++l) {
      const int n_in = layers[l - 1], n_out = layers[l];
      const double bound = std::sqrt(6.0 / (n_in + n_out));
      for (int w = 0; w < n_in * n_out; ++w) {
        CHECK(std::abs(t1(idx + w)) <= bound);
      }
      for (int b = 0; b < n_out; ++b) CHECK(t1(idx + n_in * n_out + b) == 0.0);
      idx += n_in * n_out + n_out;
    }
  }
  CHECK(idx == 97);
}

TEST_CASE("xavier initialization rejects non-network families") {
  CHECK_THROWS_AS((void)DisturbanceModel::cdm(1).xavier_init(1),
                  UnsupportedFamilyError);
  CHECK_THROWS_AS((void)DisturbanceModel::pdm_vanderpol().xavier_init(1),
                  UnsupportedFamilyError);
}

TEST_CASE("theta arity is checked") {
  const DisturbanceModel m = DisturbanceModel::pdm_vanderpol();
  CHECK_THROWS_AS((void)m.eval_hx<double>(vec2(0, 0), vec1(0), Vec::Zero(9)),
                  DimensionError);
}

TEST_CASE("parameter jacobians of every family match finite differences") {
  std::mt19937 gen(11);
  const CstrParams cstr_params{};
  const std::vector<DisturbanceModel> families = {
      DisturbanceModel::cdm(1), DisturbanceModel::pdm_vanderpol(),
      DisturbanceModel::pdm_cstr(cstr_params),
      DisturbanceModel::fnn_default(2, 1, 1)};
  for (const auto& m : families) {
    for (int trial = 0; trial < 25; ++trial) {
      Vec x = test::random_vec(gen, 2);
      if (m.pdm_basis() == PdmBasis::CstrModelCopy ||
          m.family() == DisturbanceFamily::Pdm) {
        // keep the CSTR basis away from the 1/T singularity
        if (m.pdm_basis() == PdmBasis::CstrModelCopy) {
          x(0) = 350.0 + 20.0 * x(0);
          x(1) = 2.0 + 0.5 * x(1);
        }
      }
      const Vec u = test::random_vec(gen, 1);
      const Vec theta = test::random_vec(gen, m.n_theta());

      auto hx_of_theta = [&](const Vec& t) {
        return m.eval_hx<double>(x, u, t);
      };
      auto hy_of_theta = [&](const Vec& t) { return m.eval_hy<double>(x, t); };
      auto hx_of_x = [&](const Vec& xs) {
        return m.eval_hx<double>(xs, u, theta);
      };

      if (m.n_dx() > 0) {
        const Mat ad = jacobian(
            [&](const DualVec& t) {
              return m.eval_hx(constant_vector(x), constant_vector(u), t);
            },
            theta);
        CHECK((ad - test::fd_jacobian(hx_of_theta, theta))
                  .lpNorm<Eigen::Infinity>() < 1e-6);
        const Mat adx = jacobian(
            [&](const DualVec& xs) {
              return m.eval_hx(xs, constant_vector(u), constant_vector(theta));
            },
            x);
        CHECK((adx - test::fd_jacobian(hx_of_x, x)).lpNorm<Eigen::Infinity>() <
              2e-5);
      }
      if (m.n_dy() > 0) {
        const Mat ad = jacobian(
            [&](const DualVec& t) { return m.eval_hy(constant_vector(x), t); },
            theta);
        CHECK((ad - test::fd_jacobian(hy_of_theta, theta))
                  .lpNorm<Eigen::Infinity>() < 1e-6);
      }
    }
  }
}

TEST_CASE("cstr model-copy basis spans the parameter mismatch exactly") {
  // Plant and model share the activation energy; other parameters differ.
  CstrParams plant;
  CstrParams model = plant;
  model.arrhenius_prefactor *= 0.9;
  model.feed_temperature += 2.0;
  model.heat_of_reaction_term *= 1.08;
  model.heat_transfer_term *= 0.9;

  // Coefficients from matching basis terms to the rhs difference.
  Vec theta = Vec::Zero(7);
  const double dflow = plant.flow_over_volume - model.flow_over_volume;
  theta(1) = dflow / model.flow_over_volume;
  theta(0) = plant.flow_over_volume * plant.feed_temperature -
             model.flow_over_volume * model.feed_temperature -
             theta(1) * model.flow_over_volume * model.feed_temperature;
  theta(2) = plant.heat_of_reaction_term * plant.arrhenius_prefactor /
                 (model.heat_of_reaction_term * model.arrhenius_prefactor) -
             1.0;
  theta(3) = plant.heat_transfer_term / model.heat_transfer_term - 1.0;
  theta(5) = dflow / model.flow_over_volume;
  theta(4) = plant.flow_over_volume * plant.feed_concentration -
             model.flow_over_volume * model.feed_concentration -
             theta(5) * model.flow_over_volume * model.feed_concentration;
  theta(6) = -(plant.arrhenius_prefactor - model.arrhenius_prefactor) /
             model.arrhenius_prefactor;

  const CstrSystem plant_sys(plant);
  const CstrSystem model_sys(model);
  const DisturbanceModel dist = DisturbanceModel::pdm_cstr(model);
  std::mt19937 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x(2);
    x << 350.0 + 40.0 * test::random_vec(gen, 1)(0),
        2.0 + 1.5 * std::abs(test::random_vec(gen, 1)(0));
    const Vec u = vec1(300.0 + 10.0 * test::random_vec(gen, 1)(0));
    const Vec d = dist.eval_hx<double>(x, u, theta);
    const Vec corrected = model_sys.rhs(x, u, d);
    const Vec truth = plant_sys.rhs(x, u, Vec());
    CHECK((corrected - truth).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}
