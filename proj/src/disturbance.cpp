#include "ofmpc/disturbance.hpp"

#include <cmath>
#include <random>

namespace ofmpc {

std::string to_string(DisturbanceFamily family) {
  switch (family) {
    case DisturbanceFamily::Cdm: return "cdm";
    case DisturbanceFamily::Pdm: return "pdm";
    case DisturbanceFamily::Fnn: return "fnn";
  }
  return "?";
}

DisturbanceFamily family_from_string(const std::string& name) {
  if (name == "cdm") return DisturbanceFamily::Cdm;
  if (name == "pdm") return DisturbanceFamily::Pdm;
  if (name == "fnn") return DisturbanceFamily::Fnn;
  throw ConfigError("unknown disturbance family '" + name + "'");
}

int fnn_parameter_count(const std::vector<int>& layers) {
  int count = 0;
  for (std::size_t l = 1; l < layers.size(); ++l)
    count += layers[l - 1] * layers[l] + layers[l];
  return count;
}

void DisturbanceModel::check_theta(Eigen::Index size) const {
  if (size != n_theta_)
    throw DimensionError("disturbance: theta size " + std::to_string(size) +
                         ", expected " + std::to_string(n_theta_));
}

DisturbanceModel DisturbanceModel::cdm(int n_output) {
  DisturbanceModel m;
  m.family_ = DisturbanceFamily::Cdm;
  m.n_dx_ = 0;
  m.n_dy_ = n_output;
  m.n_theta_ = n_output;
  return m;
}

DisturbanceModel DisturbanceModel::pdm_vanderpol() {
  DisturbanceModel m;
  m.family_ = DisturbanceFamily::Pdm;
  m.pdm_basis_ = PdmBasis::VanDerPol;
  m.n_dx_ = 1;
  m.n_dy_ = 0;
  m.n_theta_ = 10;
  m.n_x_ = 2;
  m.n_u_ = 1;
  return m;
}

DisturbanceModel DisturbanceModel::pdm_cstr(const CstrParams& nominal_params) {
  DisturbanceModel m;
  m.family_ = DisturbanceFamily::Pdm;
  m.pdm_basis_ = PdmBasis::CstrModelCopy;
  m.cstr_params_ = nominal_params;
  m.n_dx_ = 2;
  m.n_dy_ = 0;
  m.n_theta_ = 7;
  m.n_x_ = 2;
  m.n_u_ = 1;
  return m;
}

DisturbanceModel DisturbanceModel::fnn(FnnArchitecture architecture) {
  if (architecture.hx_layers.size() < 2 || architecture.hy_layers.size() < 2)
    throw ConfigError("fnn: networks need at least input and output layers");
  DisturbanceModel m;
  m.family_ = DisturbanceFamily::Fnn;
  const int n_in = architecture.hx_layers.front();
  if (architecture.in_offset.size() == 0)
    architecture.in_offset = Vec::Zero(n_in);
  if (architecture.in_scale.size() == 0)
    architecture.in_scale = Vec::Ones(n_in);
  if (architecture.hx_out_scale.size() == 0)
    architecture.hx_out_scale = Vec::Ones(architecture.hx_layers.back());
  if (architecture.hy_out_scale.size() == 0)
    architecture.hy_out_scale = Vec::Ones(architecture.hy_layers.back());
  if (architecture.in_offset.size() != n_in ||
      architecture.in_scale.size() != n_in)
    throw ConfigError("fnn: normalization arity must match the hx input");
  m.n_dx_ = architecture.hx_layers.back();
  m.n_dy_ = architecture.hy_layers.back();
  m.n_theta_ = fnn_parameter_count(architecture.hx_layers) +
               fnn_parameter_count(architecture.hy_layers);
  m.n_x_ = architecture.hy_layers.front();
  m.n_u_ = n_in - m.n_x_;
  m.fnn_ = std::move(architecture);
  return m;
}

DisturbanceModel DisturbanceModel::fnn_default(int n_state, int n_input,
                                               int n_output) {
  FnnArchitecture arch;
  arch.hx_layers = {n_state + n_input, 6, 6, n_state};
  arch.hy_layers = {n_state, 4, n_output};
  return fnn(std::move(arch));
}

namespace {

void xavier_fill(const std::vector<int>& layers, std::mt19937& gen,
                 Vec& theta, int offset) {
  int idx = offset;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const int n_in = layers[l - 1];
    const int n_out = layers[l];
    const double bound = std::sqrt(6.0 / (n_in + n_out));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (int w = 0; w < n_in * n_out; ++w) theta(idx + w) = uniform(gen);
    // biases stay zero
    idx += n_in * n_out + n_out;
  }
}

}  // namespace

Vec DisturbanceModel::xavier_init(unsigned int seed) const {
  if (family_ != DisturbanceFamily::Fnn)
    throw UnsupportedFamilyError("xavier_init: only defined for FNN models");
  Vec theta = Vec::Zero(n_theta_);
  std::mt19937 gen(seed);
  xavier_fill(fnn_.hx_layers, gen, theta, 0);
  xavier_fill(fnn_.hy_layers, gen, theta, fnn_parameter_count(fnn_.hx_layers));
  return theta;
}

}  // namespace ofmpc
