#pragma once

#include <array>
#include <complex>

#include "dhl/complex_sphere.hpp"
#include "dhl/errors.hpp"

namespace dhl {

// Truncated Taylor series (jet) of order <= 4 in one complex variable.
// c[k] holds the k-th Taylor coefficient f^(k)/k!, so products are plain
// truncated convolutions and one code path serves every derivative order.
struct Jet {
  static constexpr int kMaxOrder = 4;

  int order = 0;
  std::array<Complex, kMaxOrder + 1> c{};

  static Jet constant(Complex v, int ord) {
    check_order(ord);
    Jet j;
    j.order = ord;
    j.c[0] = v;
    return j;
  }

  // The identity function t -> t expanded at the point v.
  static Jet variable(Complex v, int ord) {
    Jet j = constant(v, ord);
    if (ord >= 1) j.c[1] = 1.0;
    return j;
  }

  Complex value() const { return c[0]; }

  // k-th derivative of the represented function at the expansion point.
  Complex derivative(int k) const {
    static constexpr double kFactorial[] = {1.0, 1.0, 2.0, 6.0, 24.0};
    if (k < 0 || k > order) throw UnsupportedOrderError("Jet: derivative order out of range");
    return c[static_cast<std::size_t>(k)] * kFactorial[k];
  }

  static void check_order(int ord) {
    if (ord < 0 || ord > kMaxOrder)
      throw UnsupportedOrderError("Jet: order must lie in [0, 4]");
  }
};

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r = a;
  for (int k = 0; k <= a.order; ++k) r.c[k] += b.c[k];
  return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r = a;
  for (int k = 0; k <= a.order; ++k) r.c[k] -= b.c[k];
  return r;
}

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r = Jet::constant(0.0, a.order);
  for (int k = 0; k <= a.order; ++k) {
    Complex s(0.0, 0.0);
    for (int i = 0; i <= k; ++i) s += a.c[i] * b.c[k - i];
    r.c[k] = s;
  }
  return r;
}

inline Jet operator*(Complex s, const Jet& a) {
  Jet r = a;
  for (int k = 0; k <= a.order; ++k) r.c[k] *= s;
  return r;
}

inline Jet operator+(const Jet& a, Complex s) {
  Jet r = a;
  r.c[0] += s;
  return r;
}

// a^n for integer n >= 0 by repeated squaring on jets.
inline Jet jet_pow_int(const Jet& a, int n) {
  Jet r = Jet::constant(1.0, a.order);
  Jet base = a;
  while (n > 0) {
    if (n & 1) r = r * base;
    base = base * base;
    n >>= 1;
  }
  return r;
}

// 1/a; requires a(0) != 0.
inline Jet jet_reciprocal(const Jet& a) {
  if (a.c[0] == Complex(0.0, 0.0)) throw PoleError("Jet: reciprocal of a vanishing jet");
  Jet r = Jet::constant(1.0 / a.c[0], a.order);
  for (int k = 1; k <= a.order; ++k) {
    Complex s(0.0, 0.0);
    for (int i = 1; i <= k; ++i) s += a.c[i] * r.c[k - i];
    r.c[k] = -s / a.c[0];
  }
  return r;
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * jet_reciprocal(b); }

// Principal log(a); requires a(0) != 0.  Writing a = a0(1 + v) with v(0) = 0,
// log a = Log a0 + v - v^2/2 + v^3/3 - v^4/4 (exact at order 4).
inline Jet jet_log(const Jet& a) {
  if (a.c[0] == Complex(0.0, 0.0)) throw PoleError("Jet: log of a vanishing jet");
  Jet v = (1.0 / a.c[0]) * a;
  v.c[0] = 0.0;
  Jet r = Jet::constant(std::log(a.c[0]), a.order);
  Jet p = v;
  static constexpr double kSign[] = {1.0, -0.5, 1.0 / 3.0, -0.25};
  for (int m = 1; m <= a.order; ++m) {
    r = r + kSign[m - 1] * p;
    if (m < a.order) p = p * v;
  }
  return r;
}

// outer(inner): outer expanded at the point inner(0).  The local increment
// X = inner - inner(0) has zero constant term, so Horner on truncated
// polynomials realises the chain rule up to the stored order.
inline Jet jet_compose(const Jet& outer, const Jet& inner) {
  Jet x = inner;
  x.c[0] = 0.0;
  Jet r = Jet::constant(outer.c[outer.order], inner.order);
  for (int k = outer.order - 1; k >= 0; --k) {
    r = r * x;
    r.c[0] += outer.c[k];
  }
  return r;
}

}  // namespace dhl
