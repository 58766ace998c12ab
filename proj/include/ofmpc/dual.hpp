#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <string>

#include "ofmpc/errors.hpp"

namespace ofmpc {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Forward-mode scalar: a value plus a vector of partial derivatives with
/// respect to the current seed variables. A Dual with an empty partials
/// vector is a constant (zero gradient against any seed length), which keeps
/// mixed expressions cheap when only a few arguments are differentiated.
///
/// Supported primitives: +, -, *, /, exp, sin, cos, tanh, sigmoid, pow with
/// constant exponent. The set is closed: anything else does not compile.
class Dual {
 public:
  Dual() : value_(0.0) {}
  Dual(double v) : value_(v) {}  // NOLINT: implicit constant lift is the point
  Dual(double v, Vec partials) : value_(v), partials_(std::move(partials)) {}

  /// Independent variable `index` out of `n_seed`: partials = unit vector.
  static Dual seeded(double v, int n_seed, int index) {
    Vec p = Vec::Zero(n_seed);
    p(index) = 1.0;
    return Dual(v, std::move(p));
  }

  double value() const { return value_; }
  const Vec& partials() const { return partials_; }
  bool is_constant() const { return partials_.size() == 0; }

  double partial(int i) const {
    return i < partials_.size() ? partials_(i) : 0.0;
  }

  Dual& operator+=(const Dual& b);
  Dual& operator-=(const Dual& b);
  Dual& operator*=(const Dual& b);
  Dual& operator/=(const Dual& b);

 private:
  friend Dual operator+(const Dual& a, const Dual& b);
  friend Dual operator-(const Dual& a, const Dual& b);
  friend Dual operator*(const Dual& a, const Dual& b);
  friend Dual operator/(const Dual& a, const Dual& b);
  friend Dual chain(double value, double dfdx, const Dual& x);

  // c_a * a.partials + c_b * b.partials with empty vectors read as zero.
  static Vec combine(const Vec& a, double c_a, const Vec& b, double c_b) {
    if (a.size() == 0 && b.size() == 0) return Vec();
    if (a.size() == 0) return c_b * b;
    if (b.size() == 0) return c_a * a;
    if (a.size() != b.size())
      throw DimensionError("Dual: mixed seed lengths " +
                           std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
    return c_a * a + c_b * b;
  }

  double value_;
  Vec partials_;
};

/// value = f(x.value), dfdx = f'(x.value); applies the chain rule.
inline Dual chain(double value, double dfdx, const Dual& x) {
  if (x.is_constant()) return Dual(value);
  return Dual(value, dfdx * x.partials_);
}

inline Dual operator+(const Dual& a, const Dual& b) {
  return Dual(a.value_ + b.value_,
              Dual::combine(a.partials_, 1.0, b.partials_, 1.0));
}
inline Dual operator-(const Dual& a, const Dual& b) {
  return Dual(a.value_ - b.value_,
              Dual::combine(a.partials_, 1.0, b.partials_, -1.0));
}
inline Dual operator*(const Dual& a, const Dual& b) {
  return Dual(a.value_ * b.value_,
              Dual::combine(a.partials_, b.value_, b.partials_, a.value_));
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const double inv = 1.0 / b.value_;
  return Dual(a.value_ * inv, Dual::combine(a.partials_, inv, b.partials_,
                                            -a.value_ * inv * inv));
}
inline Dual operator-(const Dual& a) { return chain(-a.value(), -1.0, a); }
inline Dual operator+(const Dual& a) { return a; }

inline Dual& Dual::operator+=(const Dual& b) { return *this = *this + b; }
inline Dual& Dual::operator-=(const Dual& b) { return *this = *this - b; }
inline Dual& Dual::operator*=(const Dual& b) { return *this = *this * b; }
inline Dual& Dual::operator/=(const Dual& b) { return *this = *this / b; }

inline bool operator==(const Dual& a, const Dual& b) {
  return a.value() == b.value();
}
inline bool operator!=(const Dual& a, const Dual& b) { return !(a == b); }
inline bool operator<(const Dual& a, const Dual& b) {
  return a.value() < b.value();
}
inline bool operator>(const Dual& a, const Dual& b) { return b < a; }
inline bool operator<=(const Dual& a, const Dual& b) { return !(b < a); }
inline bool operator>=(const Dual& a, const Dual& b) { return !(a < b); }

inline Dual exp(const Dual& x) {
  const double e = std::exp(x.value());
  return chain(e, e, x);
}
inline Dual sin(const Dual& x) {
  return chain(std::sin(x.value()), std::cos(x.value()), x);
}
inline Dual cos(const Dual& x) {
  return chain(std::cos(x.value()), -std::sin(x.value()), x);
}
inline Dual tanh(const Dual& x) {
  const double t = std::tanh(x.value());
  return chain(t, 1.0 - t * t, x);
}
inline Dual pow(const Dual& x, double p) {
  return chain(std::pow(x.value(), p), p * std::pow(x.value(), p - 1.0), x);
}

/// Logistic function 1 / (1 + e^{-z}).
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline Dual sigmoid(const Dual& x) {
  const double s = sigmoid(x.value());
  return chain(s, s * (1.0 - s), x);
}

}  // namespace ofmpc

namespace Eigen {

template <>
struct NumTraits<ofmpc::Dual> : NumTraits<double> {
  using Real = ofmpc::Dual;
  using NonInteger = ofmpc::Dual;
  using Literal = double;
  using Nested = ofmpc::Dual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 8,
    MulCost = 8
  };
};

}  // namespace Eigen

namespace ofmpc {

using DualVec = VecX<Dual>;

/// Lift `v` to Duals seeded against `n_seed` variables starting at `offset`.
inline DualVec seed_vector(const Vec& v, int n_seed, int offset) {
  DualVec out(v.size());
  for (int i = 0; i < v.size(); ++i)
    out(i) = Dual::seeded(v(i), n_seed, offset + i);
  return out;
}

/// Lift `v` to constant Duals (not differentiated against anything).
inline DualVec constant_vector(const Vec& v) {
  DualVec out(v.size());
  for (int i = 0; i < v.size(); ++i) out(i) = Dual(v(i));
  return out;
}

inline Vec values(const DualVec& v) {
  Vec out(v.size());
  for (int i = 0; i < v.size(); ++i) out(i) = v(i).value();
  return out;
}

/// Assemble the m x n_seed Jacobian from a seeded evaluation. Throws
/// NonFiniteError naming the first non-finite output row.
inline Mat extract_jacobian(const DualVec& out, int n_seed) {
  Mat jac(out.size(), n_seed);
  for (int i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out(i).value()))
      throw NonFiniteError("non-finite value at output index " +
                           std::to_string(i));
    for (int j = 0; j < n_seed; ++j) {
      const double d = out(i).partial(j);
      if (!std::isfinite(d))
        throw NonFiniteError("non-finite derivative at output index " +
                             std::to_string(i));
      jac(i, j) = d;
    }
  }
  return jac;
}

using VectorFunc = std::function<DualVec(const DualVec&)>;

/// m x n Jacobian of `func` at `point` by one forward sweep.
inline Mat jacobian(const VectorFunc& func, const Vec& point) {
  const int n = static_cast<int>(point.size());
  const DualVec out = func(seed_vector(point, n, 0));
  return extract_jacobian(out, n);
}

}  // namespace ofmpc
