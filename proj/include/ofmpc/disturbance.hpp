#pragma once

#include <string>
#include <vector>

#include "ofmpc/dual.hpp"
#include "ofmpc/dynamics.hpp"
#include "ofmpc/errors.hpp"

namespace ofmpc {

enum class DisturbanceFamily { Cdm, Pdm, Fnn };

enum class PdmBasis { VanDerPol, CstrModelCopy };

std::string to_string(DisturbanceFamily family);
DisturbanceFamily family_from_string(const std::string& name);

/// Layer sizes include input and output: {3, 6, 6, 2} is a network with a
/// 3-dim input, two hidden layers of 6 sigmoid units, and a 2-dim linear
/// output. Parameters are packed per layer, weights row-major then biases.
struct FnnArchitecture {
  std::vector<int> hx_layers;  // input (x,u) -> d_x
  std::vector<int> hy_layers;  // input x     -> d_y
  // Inputs are fed as (raw - offset) / scale; offsets/scales cover the hx
  // input (x,u), hy uses the leading n_x entries. Outputs of the linear
  // layer are multiplied by out_scale. Identity by default.
  Vec in_offset;
  Vec in_scale;
  Vec hx_out_scale;
  Vec hy_out_scale;
};

/// Parametric disturbance pair (h_x, h_y) with exact parameter Jacobians via
/// Dual evaluation. h_y structurally never sees the input u.
class DisturbanceModel {
 public:
  /// Classical additive output disturbance: h_x absent, h_y(x, theta) = theta.
  static DisturbanceModel cdm(int n_output);

  /// 10-term polynomial in (v', v, u): (1, v', v'^2, v, v^2, v'v, v'^2 v,
  /// v' v^2, v'^2 v^2, u); scalar d_x entering the v'' equation.
  static DisturbanceModel pdm_vanderpol();

  /// Structured basis copying the nominal CSTR right-hand-side terms, one
  /// additive correction per state equation; 7 parameters total.
  static DisturbanceModel pdm_cstr(const CstrParams& nominal_params);

  static DisturbanceModel fnn(FnnArchitecture architecture);

  /// Van der Pol / CSTR shaped network: h_x is (x,u) -> n_x with hidden
  /// layers {6, 6}, h_y is x -> n_output with hidden layer {4}.
  static DisturbanceModel fnn_default(int n_state, int n_input, int n_output);

  DisturbanceFamily family() const { return family_; }
  int n_dx() const { return n_dx_; }
  int n_dy() const { return n_dy_; }
  int n_theta() const { return n_theta_; }
  const FnnArchitecture& architecture() const { return fnn_; }
  PdmBasis pdm_basis() const { return pdm_basis_; }
  const CstrParams& pdm_cstr_params() const { return cstr_params_; }

  /// Exact count of parameters implied by the family and architecture.
  int param_count() const { return n_theta_; }

  template <typename Scalar>
  VecX<Scalar> eval_hx(const VecX<Scalar>& x, const VecX<Scalar>& u,
                       const VecX<Scalar>& theta) const;

  template <typename Scalar>
  VecX<Scalar> eval_hy(const VecX<Scalar>& x, const VecX<Scalar>& theta) const;

  /// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases. FNN only.
  Vec xavier_init(unsigned int seed) const;

 private:
  DisturbanceModel() = default;

  template <typename Scalar>
  VecX<Scalar> fnn_forward(const std::vector<int>& layers,
                           const VecX<Scalar>& theta, int theta_offset,
                           const Vec& out_scale, VecX<Scalar> act) const;

  void check_theta(Eigen::Index size) const;

  DisturbanceFamily family_ = DisturbanceFamily::Cdm;
  int n_dx_ = 0;
  int n_dy_ = 0;
  int n_theta_ = 0;
  int n_x_ = 0;  // expected state arity (0 = unchecked, CDM h_y is generic)
  int n_u_ = 0;
  PdmBasis pdm_basis_ = PdmBasis::VanDerPol;
  CstrParams cstr_params_;  // PDM CstrModelCopy only
  FnnArchitecture fnn_;
};

int fnn_parameter_count(const std::vector<int>& layers);

// --- template bodies -------------------------------------------------------

template <typename Scalar>
VecX<Scalar> DisturbanceModel::fnn_forward(const std::vector<int>& layers,
                                           const VecX<Scalar>& theta,
                                           int theta_offset,
                                           const Vec& out_scale,
                                           VecX<Scalar> act) const {
  int idx = theta_offset;
  for (std::size_t layer = 1; layer < layers.size(); ++layer) {
    const int n_in = layers[layer - 1];
    const int n_out = layers[layer];
    VecX<Scalar> next(n_out);
    for (int i = 0; i < n_out; ++i) {
      Scalar z = theta(idx + n_in * n_out + i);  // bias
      for (int j = 0; j < n_in; ++j) z += theta(idx + i * n_in + j) * act(j);
      next(i) = (layer + 1 < layers.size())
                    ? sigmoid(z)
                    : z * Scalar(out_scale(i));  // linear output layer
    }
    act = std::move(next);
    idx += n_in * n_out + n_out;
  }
  return act;
}

template <typename Scalar>
VecX<Scalar> DisturbanceModel::eval_hx(const VecX<Scalar>& x,
                                       const VecX<Scalar>& u,
                                       const VecX<Scalar>& theta) const {
  check_theta(theta.size());
  switch (family_) {
    case DisturbanceFamily::Cdm:
      return VecX<Scalar>(0);
    case DisturbanceFamily::Pdm: {
      if (x.size() != n_x_ || u.size() != n_u_)
        throw DimensionError("eval_hx: state/input arity mismatch");
      if (pdm_basis_ == PdmBasis::VanDerPol) {
        const Scalar& vd = x(0);
        const Scalar& v = x(1);
        VecX<Scalar> d(1);
        d(0) = theta(0) + theta(1) * vd + theta(2) * vd * vd + theta(3) * v +
               theta(4) * v * v + theta(5) * vd * v + theta(6) * vd * vd * v +
               theta(7) * vd * v * v + theta(8) * vd * vd * v * v +
               theta(9) * u(0);
        return d;
      }
      // CstrModelCopy: correction terms shaped like the nominal rhs.
      const CstrParams& p = cstr_params_;
      const Scalar& temp = x(0);
      const Scalar& conc = x(1);
      using ofmpc::exp;
      using std::exp;
      const Scalar rate = Scalar(p.arrhenius_prefactor) *
                          exp(Scalar(-p.activation_energy_over_r) / temp) *
                          conc;
      VecX<Scalar> d(2);
      d(0) = theta(0) +
             theta(1) * Scalar(p.flow_over_volume) *
                 (Scalar(p.feed_temperature) - temp) +
             theta(2) * Scalar(p.heat_of_reaction_term) * rate +
             theta(3) * Scalar(p.heat_transfer_term) * (u(0) - temp);
      d(1) = theta(4) +
             theta(5) * Scalar(p.flow_over_volume) *
                 (Scalar(p.feed_concentration) - conc) +
             theta(6) * rate;
      return d;
    }
    case DisturbanceFamily::Fnn: {
      const int n_in = fnn_.hx_layers.front();
      if (x.size() + u.size() != n_in)
        throw DimensionError("eval_hx: fnn input arity mismatch");
      VecX<Scalar> in(n_in);
      for (int i = 0; i < x.size(); ++i)
        in(i) = (x(i) - Scalar(fnn_.in_offset(i))) / Scalar(fnn_.in_scale(i));
      for (int i = 0; i < u.size(); ++i) {
        const int j = static_cast<int>(x.size()) + i;
        in(j) = (u(i) - Scalar(fnn_.in_offset(j))) / Scalar(fnn_.in_scale(j));
      }
      return fnn_forward(fnn_.hx_layers, theta, 0, fnn_.hx_out_scale,
                         std::move(in));
    }
  }
  throw UnsupportedFamilyError("eval_hx: unknown family");
}

template <typename Scalar>
VecX<Scalar> DisturbanceModel::eval_hy(const VecX<Scalar>& x,
                                       const VecX<Scalar>& theta) const {
  check_theta(theta.size());
  switch (family_) {
    case DisturbanceFamily::Cdm:
      return theta;  // d_y = theta
    case DisturbanceFamily::Pdm:
      return VecX<Scalar>(0);
    case DisturbanceFamily::Fnn: {
      const int n_in = fnn_.hy_layers.front();
      if (x.size() != n_in)
        throw DimensionError("eval_hy: fnn input arity mismatch");
      VecX<Scalar> in(n_in);
      for (int i = 0; i < n_in; ++i)
        in(i) = (x(i) - Scalar(fnn_.in_offset(i))) / Scalar(fnn_.in_scale(i));
      return fnn_forward(fnn_.hy_layers, theta,
                         fnn_parameter_count(fnn_.hx_layers),
                         fnn_.hy_out_scale, std::move(in));
    }
  }
  throw UnsupportedFamilyError("eval_hy: unknown family");
}

}  // namespace ofmpc
