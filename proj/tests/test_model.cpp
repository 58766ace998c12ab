#include <doctest.h>

#include <memory>
#include <random>

#include "ofmpc/model.hpp"
#include "test_systems.hpp"
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

PredictionModel vdp_model(VanDerPolParams params, DisturbanceModel dist) {
  return PredictionModel(std::make_shared<VanDerPolSystem>(params), 0.5, 8,
                         std::move(dist), {1});
}

}  // namespace

TEST_CASE("zero mismatch and zero theta reproduce the plant step exactly") {
  const VanDerPolParams plant{1.0, 1.0, 1.0};
  const VanDerPolSystem plant_sys(plant);
  const PredictionModel model =
      vdp_model(plant, DisturbanceModel::pdm_vanderpol());
  std::mt19937 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = test::random_vec(gen, 2);
    const Vec u = test::random_vec(gen, 1);
    const Vec plant_next = rk4_step<double>(plant_sys, x, u, Vec(), 0.5, 8);
    const Vec model_next = model.predict_state<double>(x, u, Vec::Zero(10));
    CHECK((plant_next - model_next).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("pdm at the derived theta matches the true plant step") {
  const VanDerPolSystem plant_sys({1.0, 1.0, 1.0});
  const PredictionModel model =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::pdm_vanderpol());
  const Vec theta = test::vdp_mismatch_theta({1.0, 1.0, 1.0}, {0.8, 0.9, 0.8});
  std::mt19937 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = test::random_vec(gen, 2);
    const Vec u = test::random_vec(gen, 1);
    const Vec plant_next = rk4_step<double>(plant_sys, x, u, Vec(), 0.5, 8);
    const Vec model_next = model.predict_state<double>(x, u, theta);
    CHECK((plant_next - model_next).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("cdm leaves the state prediction untouched") {
  const PredictionModel with_cdm =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::cdm(1));
  const PredictionModel bare =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::pdm_vanderpol());
  const Vec x = vec2(0.3, -1.1);
  const Vec u = vec1(0.4);
  const Vec a = with_cdm.predict_state<double>(x, u, vec1(5.0));
  const Vec b = bare.predict_state<double>(x, u, Vec::Zero(10));
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("output map adds the output disturbance when present") {
  const PredictionModel cdm = vdp_model({1, 1, 1}, DisturbanceModel::cdm(1));
  CHECK(cdm.predict_output<double>(vec2(9.0, 2.0), vec1(0.3))(0) ==
        doctest::Approx(2.3));
  const PredictionModel pdm =
      vdp_model({1, 1, 1}, DisturbanceModel::pdm_vanderpol());
  CHECK(pdm.predict_output<double>(vec2(9.0, 2.0), Vec::Zero(10))(0) == 2.0);
  const DisturbanceModel fnn = DisturbanceModel::fnn_default(2, 1, 1);
  const Vec theta = fnn.xavier_init(9);
  const PredictionModel fnn_model = vdp_model({1, 1, 1}, fnn);
  const Vec x = vec2(0.4, -0.6);
  const Vec expected =
      vec1(x(1) + test::fnn_oracle({2, 4, 1}, theta,
                                   fnn_parameter_count({3, 6, 6, 2}), x,
                                   Vec::Ones(1))(0));
  CHECK((fnn_model.predict_output<double>(x, theta) - expected)
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("linearization of a cdm-augmented linear model is block diagonal") {
  const double alpha = -0.7, beta = 1.3, dt = 0.5;
  const int substeps = 4;
  auto sys = std::make_shared<test::LinearOdeSystem>(
      Mat::Constant(1, 1, alpha), Mat::Constant(1, 1, beta));
  const PredictionModel model(sys, dt, substeps, DisturbanceModel::cdm(1),
                              {0});

  double a = 0.0, b = 0.0;
  test::rk4_affine_coefficients(alpha, beta, dt, substeps, &a, &b);

  const auto lin = model.linearize(vec1(0.8), vec1(-0.2), vec1(0.1));
  Mat a_expected(2, 2);
  a_expected << a, 0.0, 0.0, 1.0;
  Mat c_expected(1, 2);
  c_expected << 1.0, 1.0;
  CHECK((lin.a - a_expected).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((lin.c - c_expected).lpNorm<Eigen::Infinity>() < 1e-12);

  // The same recursion gives the input sensitivity.
  const Mat du = jacobian(
      [&](const DualVec& u) {
        return model.predict_state(constant_vector(vec1(0.8)), u,
                                   constant_vector(vec1(0.1)));
      },
      vec1(-0.2));
  CHECK(du(0, 0) == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("theta columns of C vanish when h_y is absent") {
  const PredictionModel model =
      vdp_model({0.8, 0.9, 0.8}, DisturbanceModel::pdm_vanderpol());
  const Mat c = model.c_matrix(vec2(0.4, 1.2), Vec::Constant(10, 0.3));
  CHECK(c.rightCols(10).isZero(0.0));
  CHECK(c(0, 1) == 1.0);  // selected state
  CHECK(c(0, 0) == 0.0);
}

TEST_CASE("theta rows of A are exactly [0 I] for every family") {
  const std::vector<DisturbanceModel> families = {
      DisturbanceModel::cdm(1), DisturbanceModel::pdm_vanderpol(),
      DisturbanceModel::fnn_default(2, 1, 1)};
  std::mt19937 gen(5);
  for (const auto& dist : families) {
    const PredictionModel model = vdp_model({0.8, 0.9, 0.8}, dist);
    const int nt = dist.n_theta();
    const Vec theta = 0.2 * test::random_vec(gen, nt);
    const Mat a =
        model.a_matrix(test::random_vec(gen, 2), test::random_vec(gen, 1),
                       theta);
    CHECK(a.bottomLeftCorner(nt, 2).isZero(0.0));
    CHECK((a.bottomRightCorner(nt, nt) - Mat::Identity(nt, nt))
              .isZero(0.0));
  }
}

TEST_CASE("linearizations agree with finite differences of the maps") {
  std::mt19937 gen(17);
  const std::vector<DisturbanceModel> families = {
      DisturbanceModel::cdm(1), DisturbanceModel::pdm_vanderpol(),
      DisturbanceModel::fnn_default(2, 1, 1)};
  for (const auto& dist : families) {
    const PredictionModel model = vdp_model({0.8, 0.9, 0.8}, dist);
    const int nt = dist.n_theta();
    for (int trial = 0; trial < 25; ++trial) {
      const Vec x = test::random_vec(gen, 2);
      const Vec u = test::random_vec(gen, 1);
      const Vec theta = 0.3 * test::random_vec(gen, nt);
      Vec joint(2 + nt);
      joint << x, theta;

      const Mat a = model.a_matrix(x, u, theta);
      const Mat a_fd = test::fd_jacobian(
          [&](const Vec& z) {
            return model.predict_state<double>(z.head(2), u, z.tail(nt));
          },
          joint);
      CHECK((a.topRows(2) - a_fd).lpNorm<Eigen::Infinity>() < 1e-6);

      const Mat c = model.c_matrix(x, theta);
      const Mat c_fd = test::fd_jacobian(
          [&](const Vec& z) {
            return model.predict_output<double>(z.head(2), z.tail(nt));
          },
          joint);
      CHECK((c - c_fd).lpNorm<Eigen::Infinity>() < 1e-6);
    }
  }
}
