#pragma once

#include <memory>
#include <string>

#include "ofmpc/dual.hpp"
#include "ofmpc/errors.hpp"

namespace ofmpc {

inline double scalar_value(double x) { return x; }
inline double scalar_value(const Dual& x) { return x.value(); }

template <typename Scalar>
bool all_finite(const VecX<Scalar>& v) {
  for (int i = 0; i < v.size(); ++i)
    if (!std::isfinite(scalar_value(v(i)))) return false;
  return true;
}

/// Continuous-time right-hand side evaluable on doubles and on Duals, so the
/// discrete map obtained by integration stays differentiable end to end.
///
/// The additive disturbance d may have any size from 0 to n_state; its
/// entries are added to the leading components of the derivative. Size 0
/// means no disturbance.
class OdeSystem {
 public:
  virtual ~OdeSystem() = default;

  int n_state() const { return n_state_; }
  int n_input() const { return n_input_; }
  int n_dist() const { return n_dist_; }
  const std::string& name() const { return name_; }

  virtual Vec rhs(const Vec& x, const Vec& u, const Vec& d) const = 0;
  virtual DualVec rhs(const DualVec& x, const DualVec& u,
                      const DualVec& d) const = 0;

 protected:
  OdeSystem(std::string name, int n_state, int n_input, int n_dist)
      : name_(std::move(name)),
        n_state_(n_state),
        n_input_(n_input),
        n_dist_(n_dist) {}

  std::string name_;
  int n_state_;
  int n_input_;
  int n_dist_;
};

/// v'' = mu (1 - beta v^2) v' - v - rho u, state ordered (v', v), output v.
struct VanDerPolParams {
  double mu = 1.0;
  double beta = 1.0;
  double rho = 1.0;
};

class VanDerPolSystem : public OdeSystem {
 public:
  explicit VanDerPolSystem(VanDerPolParams params);

  const VanDerPolParams& params() const { return params_; }

  Vec rhs(const Vec& x, const Vec& u, const Vec& d) const override;
  DualVec rhs(const DualVec& x, const DualVec& u,
              const DualVec& d) const override;

 private:
  template <typename Scalar>
  VecX<Scalar> rhs_impl(const VecX<Scalar>& x, const VecX<Scalar>& u,
                        const VecX<Scalar>& d) const;

  VanDerPolParams params_;
};

/// Two-state exothermic CSTR: reactor temperature T_r and concentration C_A,
/// coolant temperature T_c as input, output C_A. State ordered (T_r, C_A).
///
///   dT_r/dt = fv (T_f - T_r) + hr k(T_r) C_A + ht (T_c - T_r)
///   dC_A/dt = fv (C_Af - C_A) - k(T_r) C_A
///   k(T_r)  = k0 exp(-E_R / T_r)
struct CstrParams {
  double flow_over_volume = 1.0;            // fv, 1/min
  double feed_concentration = 10.0;         // C_Af, kmol/m^3
  double feed_temperature = 298.15;         // T_f, K
  double arrhenius_prefactor = 34930800.0;  // k0, 1/min
  double activation_energy_over_r = 5963.6; // E_R, K
  double heat_of_reaction_term = 11.92;     // hr, K m^3/kmol
  double heat_transfer_term = 0.30;         // ht, 1/min
};

class CstrSystem : public OdeSystem {
 public:
  explicit CstrSystem(CstrParams params);

  const CstrParams& params() const { return params_; }

  Vec rhs(const Vec& x, const Vec& u, const Vec& d) const override;
  DualVec rhs(const DualVec& x, const DualVec& u,
              const DualVec& d) const override;

 private:
  template <typename Scalar>
  VecX<Scalar> rhs_impl(const VecX<Scalar>& x, const VecX<Scalar>& u,
                        const VecX<Scalar>& d) const;

  CstrParams params_;
};

/// Classic fixed-step RK4 over `substeps` equal slices of dt for a generic
/// state-dependent right-hand side.
template <typename Scalar, typename RhsFn>
VecX<Scalar> rk4_integrate(const RhsFn& rhs, VecX<Scalar> state, double dt,
                           int substeps) {
  if (dt <= 0.0) throw DomainError("rk4: dt must be positive");
  if (substeps < 1) throw DomainError("rk4: substeps must be >= 1");
  const double h = dt / substeps;
  const Scalar h2(0.5 * h), h6(h / 6.0), two(2.0), hs(h);
  for (int s = 0; s < substeps; ++s) {
    const VecX<Scalar> k1 = rhs(state);
    const VecX<Scalar> k2 = rhs(VecX<Scalar>(state + k1 * h2));
    const VecX<Scalar> k3 = rhs(VecX<Scalar>(state + k2 * h2));
    const VecX<Scalar> k4 = rhs(VecX<Scalar>(state + k3 * hs));
    state += (k1 + k2 * two + k3 * two + k4) * h6;
    if (!all_finite(state))
      throw NonFiniteError("rk4: non-finite state at substep " +
                           std::to_string(s));
  }
  return state;
}

/// RK4 step of an OdeSystem with input and additive disturbance held
/// constant over the step (zero-order hold).
template <typename Scalar>
VecX<Scalar> rk4_step(const OdeSystem& system, VecX<Scalar> state,
                      const VecX<Scalar>& input, const VecX<Scalar>& dist,
                      double dt, int substeps) {
  if (state.size() != system.n_state())
    throw DimensionError("rk4_step: state size " +
                         std::to_string(state.size()) + ", expected " +
                         std::to_string(system.n_state()));
  return rk4_integrate<Scalar>(
      [&](const VecX<Scalar>& x) { return system.rhs(x, input, dist); },
      std::move(state), dt, substeps);
}

}  // namespace ofmpc
