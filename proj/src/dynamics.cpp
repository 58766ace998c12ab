#include "ofmpc/dynamics.hpp"

namespace ofmpc {

namespace {

template <typename Scalar>
Scalar dist_term(const VecX<Scalar>& d, int i) {
  return i < d.size() ? d(i) : Scalar(0.0);
}

void check_arity(const char* who, int nx, int nu, Eigen::Index x_size,
                 Eigen::Index u_size, Eigen::Index d_size) {
  if (x_size != nx || u_size != nu || d_size > nx)
    throw DimensionError(std::string(who) + ": bad argument sizes (" +
                         std::to_string(x_size) + ", " +
                         std::to_string(u_size) + ", " +
                         std::to_string(d_size) + ")");
}

}  // namespace

VanDerPolSystem::VanDerPolSystem(VanDerPolParams params)
    : OdeSystem("vanderpol", 2, 1, 2), params_(params) {
  if (params.mu < 0.0 || params.beta < 0.0 || params.rho < 0.0)
    throw DomainError("VanDerPolSystem: mu, beta, rho must be >= 0");
}

template <typename Scalar>
VecX<Scalar> VanDerPolSystem::rhs_impl(const VecX<Scalar>& x,
                                       const VecX<Scalar>& u,
                                       const VecX<Scalar>& d) const {
  check_arity("vanderpol_rhs", 2, 1, x.size(), u.size(), d.size());
  if (!all_finite(x) || !all_finite(u))
    throw NonFiniteError("vanderpol_rhs: non-finite state or input");
  const Scalar& vdot = x(0);
  const Scalar& v = x(1);
  VecX<Scalar> out(2);
  out(0) = Scalar(params_.mu) * (Scalar(1.0) - Scalar(params_.beta) * v * v) *
               vdot -
           v - Scalar(params_.rho) * u(0) + dist_term(d, 0);
  out(1) = vdot + dist_term(d, 1);
  return out;
}

Vec VanDerPolSystem::rhs(const Vec& x, const Vec& u, const Vec& d) const {
  return rhs_impl<double>(x, u, d);
}
DualVec VanDerPolSystem::rhs(const DualVec& x, const DualVec& u,
                             const DualVec& d) const {
  return rhs_impl<Dual>(x, u, d);
}

CstrSystem::CstrSystem(CstrParams params)
    : OdeSystem("cstr", 2, 1, 2), params_(params) {
  if (params.flow_over_volume <= 0.0 || params.feed_concentration <= 0.0 ||
      params.feed_temperature <= 0.0 || params.arrhenius_prefactor < 0.0 ||
      params.activation_energy_over_r <= 0.0 ||
      params.heat_of_reaction_term < 0.0 || params.heat_transfer_term < 0.0)
    throw DomainError("CstrSystem: non-physical parameter");
}

template <typename Scalar>
VecX<Scalar> CstrSystem::rhs_impl(const VecX<Scalar>& x, const VecX<Scalar>& u,
                                  const VecX<Scalar>& d) const {
  check_arity("cstr_rhs", 2, 1, x.size(), u.size(), d.size());
  if (!all_finite(x) || !all_finite(u))
    throw NonFiniteError("cstr_rhs: non-finite state or input");
  const Scalar& temp = x(0);
  const Scalar& conc = x(1);
  if (scalar_value(conc) < 0.0)
    throw DomainError("cstr_rhs: negative concentration");
  const CstrParams& p = params_;
  using ofmpc::exp;
  using std::exp;
  const Scalar rate = Scalar(p.arrhenius_prefactor) *
                      exp(Scalar(-p.activation_energy_over_r) / temp) * conc;
  VecX<Scalar> out(2);
  out(0) = Scalar(p.flow_over_volume) * (Scalar(p.feed_temperature) - temp) +
           Scalar(p.heat_of_reaction_term) * rate +
           Scalar(p.heat_transfer_term) * (u(0) - temp) + dist_term(d, 0);
  out(1) = Scalar(p.flow_over_volume) * (Scalar(p.feed_concentration) - conc) -
           rate + dist_term(d, 1);
  return out;
}

Vec CstrSystem::rhs(const Vec& x, const Vec& u, const Vec& d) const {
  return rhs_impl<double>(x, u, d);
}
DualVec CstrSystem::rhs(const DualVec& x, const DualVec& u,
                        const DualVec& d) const {
  return rhs_impl<Dual>(x, u, d);
}

}  // namespace ofmpc
