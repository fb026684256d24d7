#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "dhl/complex_sphere.hpp"
#include "dhl/errors.hpp"
#include "dhl/jets.hpp"

namespace dhl {

// Parameters of the degree-2b rational map f(t) = 4 t^b / (1 + t^b)^2 on the
// Riemann sphere.  b = 2^(d-1) for lattice dimension d, but any integer
// b >= 2 is admitted.
struct MapParams {
  int b;

  explicit MapParams(int branching) : b(branching) {
    if (branching < 2) throw DomainError("MapParams: b must be an integer >= 2");
  }

  double two_b() const { return 2.0 * b; }

  // Headline complex critical exponent 1 - ln 2 / ln b.
  double alpha_c() const { return 1.0 - std::log(2.0) / std::log(static_cast<double>(b)); }

  // Leading coefficient of the conjugacy to z -> z^b at the origin:
  // f(t) = 4 t^b (1 + O(t^b)), so psi(t) ~ 4^{1/(b-1)} t.
  double boettcher_coeff() const { return std::pow(4.0, 1.0 / (b - 1)); }
};

// ---- evaluation on the sphere ----------------------------------------------

// f(t) = 4u/(1+u)^2 with u = t^b.  The expression is invariant under
// u -> 1/u, so for |t| > 1 we evaluate with u = t^{-b} and never overflow.
inline ComplexValue eval_map(const MapParams& p, ComplexValue tv) {
  if (tv.infinite()) return ComplexValue(Complex(0.0, 0.0));
  Complex t = tv.value();
  Complex base = std::abs(t) > 1.0 ? 1.0 / t : t;
  Complex u = pow_int(base, p.b);
  Complex one_plus = 1.0 + u;
  if (one_plus == Complex(0.0, 0.0)) return ComplexValue::infinity();
  Complex r = 4.0 * u / (one_plus * one_plus);
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) return ComplexValue::infinity();
  return ComplexValue(r);
}

// Jet of f at a finite point, orders 0..4 in one code path.
inline Jet map_jet_full(const MapParams& p, Complex t, int order) {
  Jet::check_order(order);
  Jet var = Jet::variable(t, order);
  Jet u = std::abs(t) > 1.0 ? jet_pow_int(jet_reciprocal(var), p.b)
                            : jet_pow_int(var, p.b);
  Jet one_plus = u + Complex(1.0, 0.0);
  if (one_plus.value() == Complex(0.0, 0.0))
    throw PoleError("map_jet: evaluation at a pole of f");
  return Complex(4.0, 0.0) * (u * jet_reciprocal(one_plus * one_plus));
}

// Derivatives f^(0..order)(t) as a list.
inline std::vector<Complex> map_jet(const MapParams& p, Complex t, int order) {
  Jet j = map_jet_full(p, t, order);
  std::vector<Complex> d(static_cast<std::size_t>(order) + 1);
  for (int k = 0; k <= order; ++k) d[static_cast<std::size_t>(k)] = j.derivative(k);
  return d;
}

// f'(t) = 4b t^{b-1} (1 - t^b) / (1 + t^b)^3 in closed form; the u -> 1/u
// symmetry again avoids overflow for |t| > 1.
inline Complex map_derivative(const MapParams& p, Complex t) {
  if (std::abs(t) > 1.0) {
    Complex v = pow_int(1.0 / t, p.b);
    Complex one_plus = 1.0 + v;
    if (one_plus == Complex(0.0, 0.0)) throw PoleError("map_derivative: pole of f");
    return -4.0 * static_cast<double>(p.b) * v * (1.0 - v) / (t * one_plus * one_plus * one_plus);
  }
  Complex u = pow_int(t, p.b);
  Complex one_plus = 1.0 + u;
  if (one_plus == Complex(0.0, 0.0)) throw PoleError("map_derivative: pole of f");
  return 4.0 * static_cast<double>(p.b) * pow_int(t, p.b - 1) * (1.0 - u) /
         (one_plus * one_plus * one_plus);
}

// ---- structural decomposition f = K o S, with K conjugate to 2x^2 - 1 ------

// S(t) = t^b on the sphere.
inline ComplexValue power_part(const MapParams& p, ComplexValue tv) {
  if (tv.infinite()) return ComplexValue::infinity();
  Complex t = tv.value();
  if (std::abs(t) > 1.0) {
    Complex v = pow_int(1.0 / t, p.b);
    if (v == Complex(0.0, 0.0)) return ComplexValue::infinity();
    return ComplexValue(1.0 / v);
  }
  return ComplexValue(pow_int(t, p.b));
}

// K(u) = 4u/(1+u)^2, a rescaled Koebe-type factor; K(-1) = infinity, K(inf) = 0.
inline ComplexValue koebe_part(ComplexValue uv) {
  if (uv.infinite()) return ComplexValue(Complex(0.0, 0.0));
  Complex u = uv.value();
  Complex one_plus = 1.0 + u;
  if (one_plus == Complex(0.0, 0.0)) return ComplexValue::infinity();
  Complex r = 4.0 * u / (one_plus * one_plus);
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) return ComplexValue::infinity();
  return ComplexValue(r);
}

// phi(t) = (1+t)/(1-t); phi(1) = infinity, phi(inf) = -1.
inline ComplexValue moebius_phi(ComplexValue tv) {
  if (tv.infinite()) return ComplexValue(Complex(-1.0, 0.0));
  Complex t = tv.value();
  if (t == Complex(1.0, 0.0)) return ComplexValue::infinity();
  Complex r = (1.0 + t) / (1.0 - t);
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) return ComplexValue::infinity();
  return ComplexValue(r);
}

// T(tau) = 2 tau^2 - 1.
inline ComplexValue tchebyshev_quadratic(ComplexValue tv) {
  if (tv.infinite()) return ComplexValue::infinity();
  Complex t = tv.value();
  Complex r = 2.0 * t * t - 1.0;
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) return ComplexValue::infinity();
  return ComplexValue(r);
}

// All pieces of the decomposition evaluated at one point.  The invariants
// f_via_parts == eval_map(t) and phi_of_K == tcheb_of_phi (the Moebius
// conjugacy of K to the Tchebyshev quadratic) hold on the whole sphere.
struct DecompositionRecord {
  ComplexValue s;             // S(t) = t^b
  ComplexValue f_via_parts;   // K(S(t)) = f(t)
  ComplexValue phi_of_t;      // phi(t)
  ComplexValue tcheb_of_phi;  // T(phi(t))
  ComplexValue phi_of_K;      // phi(K(t))
};

inline DecompositionRecord decompose(const MapParams& p, ComplexValue tv) {
  DecompositionRecord r;
  r.s = power_part(p, tv);
  r.f_via_parts = koebe_part(r.s);
  r.phi_of_t = moebius_phi(tv);
  r.tcheb_of_phi = tchebyshev_quadratic(r.phi_of_t);
  r.phi_of_K = moebius_phi(koebe_part(tv));
  return r;
}

// ---- critical points and their orbits ---------------------------------------

// The 4b - 2 critical points (counted with multiplicity) are 0 and infinity
// (each of multiplicity b-1) plus the b-th roots of +1 and of -1.
inline std::vector<ComplexValue> critical_points(const MapParams& p) {
  std::vector<ComplexValue> pts;
  pts.emplace_back(Complex(0.0, 0.0));
  pts.push_back(ComplexValue::infinity());
  const double pi = std::acos(-1.0);
  for (int i = 0; i < p.b; ++i)
    pts.emplace_back(std::polar(1.0, 2.0 * pi * i / p.b));  // roots of +1 -> 1
  for (int j = 0; j < p.b; ++j)
    pts.emplace_back(std::polar(1.0, pi * (2.0 * j + 1.0) / p.b));  // roots of -1 -> inf
  return pts;
}

struct CriticalOrbit {
  ComplexValue critical_point;
  std::vector<ComplexValue> orbit;  // forward orbit including the start point
  int landing_fixed_point;          // 0 or 1
};

inline std::vector<CriticalOrbit> critical_orbits(const MapParams& p) {
  std::vector<CriticalOrbit> result;
  for (const ComplexValue& c : critical_points(p)) {
    CriticalOrbit co;
    co.critical_point = c;
    co.landing_fixed_point = -1;
    ComplexValue t = c;
    for (int step = 0; step <= 16; ++step) {
      co.orbit.push_back(t);
      if (!t.infinite()) {
        Complex z = t.value();
        if (std::abs(z) < 1e-8) {
          co.landing_fixed_point = 0;
          break;
        }
        if (std::abs(z - 1.0) < 1e-8) {
          co.landing_fixed_point = 1;
          break;
        }
      }
      t = eval_map(p, t);
    }
    if (co.landing_fixed_point < 0)
      throw NonConvergenceError("critical_orbits: orbit did not land on 0 or 1");
    result.push_back(co);
  }
  return result;
}

// ---- the repelling fixed point on (0, 1) ------------------------------------

struct FixedPointInfo {
  double location;    // t_c in (0, 1)
  double multiplier;  // f'(t_c) > 1
  double residual;    // |f(t_c) - t_c| after polishing
};

inline double eval_map_real(const MapParams& p, double t) {
  return eval_map(p, ComplexValue(Complex(t, 0.0))).value().real();
}

// Bracket the unique sign change of f(t) - t on (0, 1), bisect, then polish
// with Newton on f(t) - t.
inline FixedPointInfo find_unstable_fixed_point(const MapParams& p) {
  const int grid = 1000;
  double lo = 1e-6, hi = 1.0 - 1e-6;
  double a = lo, fa = eval_map_real(p, a) - a;
  double bb = 0.0, fb = 0.0;
  bool bracketed = false;
  for (int i = 1; i <= grid; ++i) {
    bb = lo + (hi - lo) * i / grid;
    fb = eval_map_real(p, bb) - bb;
    if (fa < 0.0 && fb >= 0.0) {
      bracketed = true;
      break;
    }
    a = bb;
    fa = fb;
  }
  if (!bracketed) throw NonConvergenceError("find_unstable_fixed_point: no sign change on (0,1)");

  for (int i = 0; i < 200 && (bb - a) > 1e-15; ++i) {
    double mid = 0.5 * (a + bb);
    double fm = eval_map_real(p, mid) - mid;
    if (fa < 0.0 ? fm < 0.0 : fm >= 0.0) {
      a = mid;
      fa = fm;
    } else {
      bb = mid;
    }
  }

  double t = 0.5 * (a + bb);
  for (int i = 0; i < 8; ++i) {
    Jet j = map_jet_full(p, Complex(t, 0.0), 1);
    double g = j.value().real() - t;
    double dg = j.derivative(1).real() - 1.0;
    if (dg == 0.0) break;
    double step = g / dg;
    t -= step;
    if (std::abs(step) < 1e-16) break;
  }

  FixedPointInfo info;
  info.location = t;
  info.multiplier = map_jet_full(p, Complex(t, 0.0), 1).derivative(1).real();
  info.residual = std::abs(eval_map_real(p, t) - t);
  if (!(info.location > 0.0 && info.location < 1.0) || !(info.multiplier > 1.0) ||
      info.residual > 1e-12)
    throw NonConvergenceError("find_unstable_fixed_point: polishing failed");
  return info;
}

// ---- preimages ---------------------------------------------------------------

// Solving f(s) = x in u = s^b gives x u^2 + (2x - 4) u + x = 0, whose roots
// multiply to 1 (Vieta).  With w = sqrt(1 - x) principal, the strictly inner
// root is u = x / (1 + w)^2; |u| = 1 can only happen for x in [1, inf).
inline Complex inner_quadratic_root(Complex x) {
  Complex w = std::sqrt(1.0 - x);
  Complex one_plus = 1.0 + w;
  return x / (one_plus * one_plus);
}

// The b preimages of x inside the closed unit disk (the branch heading toward
// the superattracting fixed point 0).
inline std::vector<Complex> basin_preimages(const MapParams& p, Complex x) {
  if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
    throw DomainError("basin_preimages: x must be finite");
  if (x.imag() == 0.0 && x.real() >= 1.0)
    throw DomainError("basin_preimages: x on the critical ray [1, inf)");
  Complex u = inner_quadratic_root(x);
  if (std::abs(std::abs(u) - 1.0) < 1e-12)
    throw BranchAmbiguityError("basin_preimages: quadratic roots both on the unit circle");
  Complex root = std::pow(u, 1.0 / p.b);  // principal b-th root
  std::vector<Complex> out(static_cast<std::size_t>(p.b));
  const double pi = std::acos(-1.0);
  for (int j = 0; j < p.b; ++j)
    out[static_cast<std::size_t>(j)] = root * std::polar(1.0, 2.0 * pi * j / p.b);
  return out;
}

// All preimages of x on the sphere.  Degenerate targets return
// multiplicity-collapsed lists: f^{-1}(1) = the b-th roots of unity (each a
// double root), f^{-1}(0) = {0, infinity} (each of multiplicity b),
// f^{-1}(inf) = the b-th roots of -1.
inline std::vector<ComplexValue> all_preimages(const MapParams& p, ComplexValue xv) {
  const double pi = std::acos(-1.0);
  std::vector<ComplexValue> out;
  if (xv.infinite()) {
    for (int j = 0; j < p.b; ++j)
      out.emplace_back(std::polar(1.0, pi * (2.0 * j + 1.0) / p.b));
    return out;
  }
  Complex x = xv.value();
  if (x == Complex(0.0, 0.0)) {
    out.emplace_back(Complex(0.0, 0.0));
    out.push_back(ComplexValue::infinity());
    return out;
  }
  if (x == Complex(1.0, 0.0)) {
    for (int i = 0; i < p.b; ++i) out.emplace_back(std::polar(1.0, 2.0 * pi * i / p.b));
    return out;
  }
  Complex u_in = inner_quadratic_root(x);
  Complex u_out = 1.0 / u_in;
  for (Complex u : {u_in, u_out}) {
    Complex root = std::pow(u, 1.0 / p.b);
    for (int j = 0; j < p.b; ++j)
      out.emplace_back(root * std::polar(1.0, 2.0 * pi * j / p.b));
  }
  return out;
}

}  // namespace dhl
