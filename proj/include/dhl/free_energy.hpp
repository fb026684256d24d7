#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "dhl/complex_sphere.hpp"
#include "dhl/errors.hpp"
#include "dhl/jets.hpp"
#include "dhl/rational_map.hpp"

namespace dhl {

// Coupling J and temperature T; both may be complex in exploratory sweeps.
struct PhysicalParams {
  Complex J;
  Complex T;
};

// Halting policy for the orbit series F(t) = sum (2b)^{-n} g(f^n(t)),
// g(t) = ln(1 + t^b).  The series is stopped once the orbit has collapsed
// onto one of the superattracting fixed points (0 or 1) or, for orders <= 1,
// once terms decay below tol on the boundary; hitting max_terms first raises
// TruncationFailure.
struct TruncationPolicy {
  double tol = 1e-12;
  int max_terms = 400;
  double stop_radius = 1e-16;

  void validate() const {
    if (!(tol > 0.0)) throw DomainError("TruncationPolicy: tol must be positive");
    if (max_terms < 1) throw DomainError("TruncationPolicy: max_terms must be >= 1");
    if (!(stop_radius > 0.0) || stop_radius > 1e-6)
      throw DomainError("TruncationPolicy: stop_radius must lie in (0, 1e-6]");
  }

  // Evaluation at Green potential g needs about log_b(1/g) orbit steps before
  // the collapse toward 0 begins; pad that depth generously.
  static TruncationPolicy near_boundary(const MapParams& p, double potential) {
    TruncationPolicy pol;
    if (potential > 0.0 && potential < 1.0) {
      int depth = static_cast<int>(
          std::ceil(std::log(1.0 / potential) / std::log(static_cast<double>(p.b))));
      pol.max_terms = depth + 64;
    } else {
      pol.max_terms = 64;
    }
    if (pol.max_terms < 64) pol.max_terms = 64;
    return pol;
  }
};

// Value and derivatives of F at a point, plus the number of series terms used.
struct FJet {
  int order = 0;
  std::array<Complex, Jet::kMaxOrder + 1> deriv{};  // F^(k), k = 0..order
  int terms_used = 0;

  Complex F() const { return deriv[0]; }
  Complex F1() const { return deriv[1]; }
  Complex F2() const { return deriv[2]; }
  Complex derivative(int k) const { return deriv[static_cast<std::size_t>(k)]; }
};

namespace detail {

inline double jet_magnitude(const Jet& j) {
  double m = 0.0;
  for (int k = 0; k <= j.order; ++k) m = std::max(m, std::abs(j.c[static_cast<std::size_t>(k)]));
  return m;
}

}  // namespace detail

// Evaluate F and its derivatives up to `order` (<= 4) by accumulating the jet
// of f^n along the forward orbit of t.
inline FJet eval_F_jet(const MapParams& p, Complex t, int order, const TruncationPolicy& policy) {
  Jet::check_order(order);
  policy.validate();

  Jet orbit = Jet::variable(t, order);   // jet of f^n at t, starting with n = 0
  Jet acc = Jet::constant(0.0, order);   // accumulated jet of F at t
  double scale = 1.0;                    // (2b)^{-n}
  const double inv_two_b = 1.0 / p.two_b();

  int quiet_boundary = 0;  // consecutive sub-tol terms in the boundary regime
  int quiet_near_one = 0;  // consecutive sub-tol terms while parked near 1

  bool done = false;
  int n = 0;
  for (; n < policy.max_terms; ++n) {
    Jet u = jet_pow_int(orbit, p.b);
    Jet term = Complex(scale, 0.0) * jet_log(u + Complex(1.0, 0.0));
    acc = acc + term;

    double t_abs = std::abs(orbit.value());
    double term_mag = detail::jet_magnitude(term);

    if (t_abs < policy.stop_radius) {
      done = true;  // orbit collapsed onto 0; the tail is doubly-exponentially small
      ++n;
      break;
    }
    if (std::abs(orbit.value() - 1.0) < 1e-6) {
      quiet_near_one = term_mag < policy.tol ? quiet_near_one + 1 : 0;
      if (quiet_near_one >= 2) {  // parked at the superattracting point 1
        done = true;
        ++n;
        break;
      }
    } else {
      // On the basin boundary the orbit never collapses, but the jet terms
      // still decay geometrically wherever the weighted derivative cocycle
      // contracts (orders 0 and 1 everywhere; order 2 at the repelling fixed
      // point, whose weight f'^2/2b is below one).  Require a short run of
      // quiet terms.  Where the cocycle expands the terms never go quiet and
      // the budget error below reports the divergence.
      quiet_boundary = term_mag < 0.25 * policy.tol ? quiet_boundary + 1 : 0;
      if (quiet_boundary >= 3) {
        done = true;
        ++n;
        break;
      }
    }

    orbit = jet_compose(map_jet_full(p, orbit.value(), order), orbit);
    scale *= inv_two_b;
  }
  if (!done)
    throw TruncationFailure("eval_F_jet: series did not settle within max_terms");

  FJet out;
  out.order = order;
  out.terms_used = n;
  for (int k = 0; k <= order; ++k) out.deriv[static_cast<std::size_t>(k)] = acc.derivative(k);
  return out;
}

// ---- physical bookkeeping ----------------------------------------------------

// t(T) = exp(-2J / (b T)): the Boltzmann variable fed to the orbit series.
inline Complex temperature_to_t(const MapParams& p, const PhysicalParams& phys) {
  if (phys.T == Complex(0.0, 0.0)) throw DomainError("temperature_to_t: T must be nonzero");
  return std::exp(-2.0 * phys.J / (static_cast<double>(p.b) * phys.T));
}

struct PhysicalFreeEnergy {
  Complex t0;       // exp(-2J/(bT))
  Complex F_of_t0;  // orbit series at t0
  Complex value;    // -J/2 - (T/2) F(t0)
};

inline PhysicalFreeEnergy eval_physical_free_energy(const MapParams& p,
                                                    const PhysicalParams& phys,
                                                    const TruncationPolicy& policy) {
  PhysicalFreeEnergy out;
  out.t0 = temperature_to_t(p, phys);
  out.F_of_t0 = eval_F_jet(p, out.t0, 0, policy).F();
  out.value = -0.5 * phys.J - 0.5 * phys.T * out.F_of_t0;
  return out;
}

// ---- the renormalization identities ------------------------------------------

// Jet of g(t) = ln(1 + t^b) at a point.
inline Jet local_g_jet(const MapParams& p, Complex t, int order) {
  Jet u = jet_pow_int(Jet::variable(t, order), p.b);
  return jet_log(u + Complex(1.0, 0.0));
}

// beta(t) = f'(t)^2 / (2b): the weight transported by one renormalization step.
inline Complex beta_weight(const MapParams& p, Complex t) {
  Complex d = map_derivative(p, t);
  return d * d / p.two_b();
}

// h(t) = (1/2b) F'(f t) f''(t) + g''(t): the inhomogeneity driving F''.
inline Complex cocycle_inhomogeneity(const MapParams& p, Complex t,
                                     const TruncationPolicy& policy) {
  Jet fj = map_jet_full(p, t, 2);
  Complex ft = fj.value();
  Complex Fp = eval_F_jet(p, ft, 1, policy).F1();
  Complex gpp = local_g_jet(p, t, 2).derivative(2);
  return Fp * fj.derivative(2) / p.two_b() + gpp;
}

// Residuals of the three transfer identities satisfied by the orbit series:
//   r0 = (1/2b) F(f t) - F(t) + g(t)
//   r1 = (f'(t)/2b) F'(f t) - F'(t) + g'(t)
//   r2 = beta(t) F''(f t) - F''(t) + h(t)
// All three vanish identically; the residuals measure series truncation and
// rounding only.
struct FunctionalResiduals {
  Complex r0;
  Complex r1;
  Complex r2;
};

inline FunctionalResiduals functional_residuals(const MapParams& p, Complex t,
                                                const TruncationPolicy& policy) {
  Jet fj = map_jet_full(p, t, 2);
  Complex ft = fj.value();
  FJet at_t = eval_F_jet(p, t, 2, policy);
  FJet at_ft = eval_F_jet(p, ft, 2, policy);
  Jet gj = local_g_jet(p, t, 2);

  const double two_b = p.two_b();
  Complex fp = fj.derivative(1);
  Complex beta = fp * fp / two_b;
  Complex h = at_ft.F1() * fj.derivative(2) / two_b + gj.derivative(2);

  FunctionalResiduals r;
  r.r0 = at_ft.F() / two_b - at_t.F() + gj.derivative(0);
  r.r1 = fp * at_ft.F1() / two_b - at_t.F1() + gj.derivative(1);
  r.r2 = beta * at_ft.F2() - at_t.F2() + h;
  return r;
}

// Direct solution U(t) = sum_n beta_n(t) h(f^n t) of
// beta(t) U(f t) - U(t) = -h(t); on the basin interior it coincides with F''.
inline Complex cocycle_solution_U(const MapParams& p, Complex t, const TruncationPolicy& policy) {
  policy.validate();
  Complex acc(0.0, 0.0);
  Complex weight(1.0, 0.0);  // beta_n(t) = prod_{k<n} beta(f^k t)
  Complex x = t;
  int quiet = 0;
  for (int n = 0; n < policy.max_terms; ++n) {
    Complex term = weight * cocycle_inhomogeneity(p, x, policy);
    acc += term;
    if (std::abs(term) < 0.25 * policy.tol) {
      if (++quiet >= 3) return acc;
    } else {
      quiet = 0;
    }
    weight *= beta_weight(p, x);
    if (std::abs(weight) < 1e-280) return acc;  // dead weight: all later terms vanish
    x = eval_map(p, ComplexValue(x)).value();
  }
  throw TruncationFailure("cocycle_solution_U: series did not settle within max_terms");
}

}  // namespace dhl
