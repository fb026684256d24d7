#pragma once

#include <cmath>
#include <complex>

#include "dhl/errors.hpp"

namespace dhl {

using Complex = std::complex<double>;

// A point of the Riemann sphere: either a finite complex number or the
// point at infinity.  The map 4t^b/(1+t^b)^2 sends poles to infinity and
// infinity to 0, so orbits are total on this type.
class ComplexValue {
 public:
  ComplexValue() : z_(0.0, 0.0), inf_(false) {}
  ComplexValue(Complex z) : z_(z), inf_(false) {}  // NOLINT: implicit by design
  ComplexValue(double re, double im = 0.0) : z_(re, im), inf_(false) {}

  static ComplexValue infinity() {
    ComplexValue v;
    v.inf_ = true;
    return v;
  }

  bool infinite() const { return inf_; }

  Complex value() const {
    if (inf_) throw DomainError("ComplexValue: finite value requested at infinity");
    return z_;
  }

  friend bool operator==(const ComplexValue& a, const ComplexValue& b) {
    if (a.inf_ || b.inf_) return a.inf_ && b.inf_;
    return a.z_ == b.z_;
  }

 private:
  Complex z_;
  bool inf_;
};

// Circular distance between two angles measured in turns (period 1).
inline double circular_distance_turns(double a, double b) {
  double d = a - b;
  d -= std::floor(d);          // now in [0, 1)
  return std::min(d, 1.0 - d);  // in [0, 1/2]
}

// Fractional part in [0, 1).
inline double frac_turn(double x) {
  double f = x - std::floor(x);
  if (f >= 1.0) f = 0.0;  // guard against floor rounding at negative epsilons
  return f;
}

// z^n for integer n >= 0 by repeated squaring.  Keeps real inputs exactly
// real, unlike the exp/log route taken by std::pow(complex, double).
inline Complex pow_int(Complex z, int n) {
  Complex r(1.0, 0.0);
  while (n > 0) {
    if (n & 1) r *= z;
    z *= z;
    n >>= 1;
  }
  return r;
}

}  // namespace dhl
