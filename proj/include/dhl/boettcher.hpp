#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "dhl/complex_sphere.hpp"
#include "dhl/errors.hpp"
#include "dhl/rational_map.hpp"
#include "dhl/rng.hpp"

namespace dhl {

// ---- Green potential ----------------------------------------------------------
//
// G(t) = -lim_n b^{-n} ln |C f^n(t)|  with C the linearizing constant at 0.
// G > 0 on the attracting basin of 0 (with logarithmic poles on the grand orbit
// of 0), G -> 0 on the basin boundary, and G = +inf is reported for points
// attracted to the other superattracting fixed point 1.

struct GreenOptions {
  double tol = 1e-9;          // absolute accuracy of the boundary-limit estimate
  int max_iter = 512;
  double collapse_radius = 1e-8;  // |t_n| below this: linearization regime
};

struct GreenPotential {
  enum class Regime { Collapse, BasinOfOne, Boundary };
  double value = 0.0;
  int iterations = 0;
  Regime regime = Regime::Boundary;
};

inline GreenPotential green_potential(const MapParams& p, Complex t,
                                      const GreenOptions& opt = GreenOptions{}) {
  const double log_c = std::log(p.boettcher_coeff());
  const double basin_one_radius = 1.0 / (static_cast<double>(p.b) * p.b);
  ComplexValue cur(t);
  double inv_bn = 1.0;  // b^{-n}
  for (int n = 0; n < opt.max_iter; ++n, inv_bn /= p.b) {
    GreenPotential out;
    out.iterations = n;
    if (cur.infinite()) {  // on the grand orbit of 0: logarithmic pole
      out.value = std::numeric_limits<double>::infinity();
      out.regime = GreenPotential::Regime::Collapse;
      return out;
    }
    Complex z = cur.value();
    double az = std::abs(z);
    if (az < opt.collapse_radius) {
      // Linearization: G = -b^{-n}(ln|t_n| + ln C) up to O(b^{-n} |t_n|^b).
      out.value = -inv_bn * (std::log(az) + log_c);
      out.regime = GreenPotential::Regime::Collapse;
      return out;
    }
    if (std::abs(z - 1.0) < basin_one_radius) {
      out.value = std::numeric_limits<double>::infinity();
      out.regime = GreenPotential::Regime::BasinOfOne;
      return out;
    }
    if (inv_bn * (std::abs(std::log(az)) + log_c + 1.0) < opt.tol) {
      // Bounded orbit with a vanishing estimate: the point sits on (or within
      // tol of) the basin boundary.
      out.value = std::max(0.0, -inv_bn * (std::log(az) + log_c));
      out.regime = GreenPotential::Regime::Boundary;
      return out;
    }
    cur = eval_map(p, cur);
  }
  throw NonConvergenceError("green_potential: orbit did not settle within max_iter");
}

// ---- logarithmic Boettcher coordinate -----------------------------------------
//
// log psi(t) = ln C + Log t - 2 sum_n b^{-(n+1)} Log(1 + f^n(t)^b).
// Inside the unit disk every factor 1 + t_n^b has positive real part, so the
// principal branches are globally consistent; outside the disk a factor may
// cross the cut, which is flagged rather than silently absorbed.

struct BoettcherLog {
  double log_modulus = 0.0;
  double phase = 0.0;  // Im(log psi); not reduced mod 2*pi
  bool branch_warning = false;
  int terms = 0;

  double theta_turns() const { return frac_turn(phase / (2.0 * std::acos(-1.0))); }
  Complex value() const {
    if (std::isinf(log_modulus) && log_modulus < 0.0) return Complex(0.0, 0.0);
    return std::exp(Complex(log_modulus, phase));
  }
};

inline BoettcherLog boettcher_log(const MapParams& p, Complex t, double tol = 1e-12,
                                  int max_iter = 600) {
  BoettcherLog out;
  if (t == Complex(0.0, 0.0)) {
    out.log_modulus = -std::numeric_limits<double>::infinity();
    return out;
  }
  const double basin_one_radius = 1.0 / (static_cast<double>(p.b) * p.b);
  Complex sum = std::log(p.boettcher_coeff()) + std::log(t);
  ComplexValue cur(t);
  double weight = 1.0 / p.b;  // b^{-(n+1)}
  double recent_factor = 0.0;
  for (int n = 0; n < max_iter; ++n, weight /= p.b) {
    if (cur.infinite())
      throw DomainError("boettcher_log: orbit met a pole; point is on the grand orbit of 0");
    Complex z = cur.value();
    if (std::abs(z - 1.0) < basin_one_radius)
      throw DomainError("boettcher_log: point is attracted to 1, outside the basin of 0");
    Complex u = pow_int(z, p.b);
    Complex factor = std::log(1.0 + u);
    if ((1.0 + u).real() <= 0.0) out.branch_warning = true;
    sum -= 2.0 * weight * factor;
    out.terms = n + 1;
    recent_factor = std::max(std::abs(factor), 0.5 * recent_factor);
    if (std::abs(z) < 1e-12) break;  // collapsed: remaining factors are 1 + O(|z|^b)
    if (weight * (2.0 * recent_factor + 10.0) < tol * (1.0 - 1.0 / p.b)) break;
    if (n + 1 == max_iter)
      throw NonConvergenceError("boettcher_log: series did not settle within max_iter");
    cur = eval_map(p, cur);
  }
  out.log_modulus = sum.real();
  out.phase = sum.imag();
  return out;
}

inline Complex boettcher_value(const MapParams& p, Complex t, double tol = 1e-12) {
  return boettcher_log(p, t, tol).value();
}

// ---- angle-guided pullback -----------------------------------------------------
//
// State of a point tracked through inverse branches: its position, its angle
// theta = arg psi / 2pi (in turns), and the offset delta = arg psi - arg t (in
// radians, as an absolutely convergent series; |delta| <= pi/(b-1)).  The
// offset obeys the exact recursion delta_child = (delta_parent - 2 arg(1+u))/b
// with u the inner quadratic root, which identifies the Boettcher angle of
// every preimage candidate without any homotopy tracking.

struct PullbackState {
  Complex point;
  double theta = 0.0;  // Boettcher angle, turns in [0,1)
  double delta = 0.0;  // arg psi - arg point, radians
};

// All b disk-interior preimages of `state.point` with their Boettcher angles.
struct PullbackCandidates {
  Complex u_inner;
  double delta_child;
  std::vector<PullbackState> states;
};

inline PullbackCandidates pullback_candidates(const MapParams& p, const PullbackState& state) {
  const double two_pi = 2.0 * std::acos(-1.0);
  PullbackCandidates out;
  out.u_inner = inner_quadratic_root(state.point);
  out.delta_child = (state.delta - 2.0 * std::arg(1.0 + out.u_inner)) / p.b;
  Complex root = std::pow(out.u_inner, 1.0 / p.b);
  out.states.resize(static_cast<std::size_t>(p.b));
  for (int j = 0; j < p.b; ++j) {
    Complex s = root * std::polar(1.0, two_pi * j / p.b);
    PullbackState st;
    st.point = s;
    st.delta = out.delta_child;
    st.theta = frac_turn((std::arg(s) + out.delta_child) / two_pi);
    out.states[static_cast<std::size_t>(j)] = st;
  }
  return out;
}

// Pull the state back one level, selecting the branch whose Boettcher angle is
// closest to target_theta.  A nearest distance above 1/(4b) of a turn means
// the offset bookkeeping lost track of the branch: that is a numerical
// failure, reported as BranchAmbiguityError.
inline PullbackState pull_back_once(const MapParams& p, const PullbackState& state,
                                    double target_theta) {
  PullbackCandidates cands = pullback_candidates(p, state);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_j = 0;
  for (std::size_t j = 0; j < cands.states.size(); ++j) {
    double d = circular_distance_turns(cands.states[j].theta, target_theta);
    if (d < best) {
      best = d;
      best_j = j;
    }
  }
  if (best > 1.0 / (4.0 * p.b))
    throw BranchAmbiguityError("pull_back_once: no preimage matches the target angle");
  return cands.states[best_j];
}

// ---- geodesic descent -----------------------------------------------------------
//
// The point at potential g on the external geodesic of angle theta is reached
// by seeding deep in the linearization regime (potential >= kDeepPotential,
// where psi^{-1}(w) = w/C to below double precision) and pulling back level by
// level; level k carries potential g b^k and angle frac(b^k theta).

inline constexpr double kDeepPotential = 18.0;

struct GeodesicDescent {
  double potential = 0.0;
  double theta = 0.0;
  int levels = 0;                       // N: number of pullback steps
  Complex seed;                         // psi-preimage at potential g * b^N
  std::vector<Complex> points;          // points[k]: potential g * b^k, k = 0..N
  std::vector<double> level_theta;      // frac(b^k theta)
  std::vector<double> level_potential;  // g * b^k
  double final_delta = 0.0;

  Complex point() const { return points.front(); }
};

inline GeodesicDescent geodesic_descent(const MapParams& p, double potential, double theta) {
  if (!(potential > 0.0))
    throw DomainError("geodesic_descent: potential must be positive");
  if (!std::isfinite(theta)) throw DomainError("geodesic_descent: theta must be finite");
  theta = frac_turn(theta);
  const double two_pi = 2.0 * std::acos(-1.0);

  int levels = 0;
  if (potential < kDeepPotential) {
    levels = static_cast<int>(
        std::ceil(std::log(kDeepPotential / potential) / std::log(static_cast<double>(p.b))));
    if (levels < 0) levels = 0;
  }

  GeodesicDescent out;
  out.potential = potential;
  out.theta = theta;
  out.levels = levels;
  out.level_theta.resize(static_cast<std::size_t>(levels) + 1);
  out.level_potential.resize(static_cast<std::size_t>(levels) + 1);
  out.points.resize(static_cast<std::size_t>(levels) + 1);

  double th = theta;
  double g = potential;
  for (int k = 0; k <= levels; ++k) {
    out.level_theta[static_cast<std::size_t>(k)] = th;
    out.level_potential[static_cast<std::size_t>(k)] = g;
    if (k < levels) {
      th = frac_turn(static_cast<double>(p.b) * th);
      g *= p.b;
    }
  }

  // Seed: psi = exp(-g_N + 2 pi i theta_N), t = psi / C exactly to double
  // precision since |psi| <= exp(-kDeepPotential).
  double g_top = out.level_potential.back();
  double th_top = out.level_theta.back();
  Complex w = std::exp(Complex(-g_top, two_pi * th_top));
  PullbackState state;
  state.point = w / p.boettcher_coeff();
  state.theta = th_top;
  state.delta = 0.0;
  out.seed = state.point;
  out.points[static_cast<std::size_t>(levels)] = state.point;

  for (int k = levels; k > 0; --k) {
    state = pull_back_once(p, state, out.level_theta[static_cast<std::size_t>(k - 1)]);
    out.points[static_cast<std::size_t>(k - 1)] = state.point;
  }
  out.final_delta = state.delta;
  return out;
}

inline Complex geodesic_point(const MapParams& p, double potential, double theta) {
  return geodesic_descent(p, potential, theta).point();
}

// A proxy for the boundary landing point of the angle-theta geodesic.  The
// potential must be tiny (at most 1e-4) for the proxy to be meaningful.
inline Complex boundary_point(const MapParams& p, double theta, double potential = 1e-8) {
  if (!(potential > 0.0) || potential > 1e-4)
    throw DomainError("boundary_point: potential must lie in (0, 1e-4]");
  return geodesic_point(p, potential, theta);
}

// M boundary samples distributed by harmonic measure (uniform Boettcher
// angles).  Indexed seeding keeps the set reproducible and order-independent.
// Individual pullback failures are excluded and counted instead of aborting
// the whole sample; callers treat a failure share above 1% as suspect.
struct HarmonicSample {
  std::vector<Complex> points;
  std::vector<double> angles;  // accepted angles, parallel to points
  int failures = 0;
};

inline HarmonicSample sample_harmonic_boundary(const MapParams& p, int count,
                                               std::uint64_t seed,
                                               double potential = 1e-7) {
  if (count < 1) throw DomainError("sample_harmonic_boundary: count must be positive");
  HarmonicSample out;
  out.points.reserve(static_cast<std::size_t>(count));
  out.angles.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SplitMix64 rng(per_sample_seed(seed, static_cast<std::uint64_t>(i)));
    double theta = rng.next_unit();
    try {
      Complex pt = geodesic_point(p, potential, theta);
      out.points.push_back(pt);
      out.angles.push_back(theta);
    } catch (const Error&) {
      ++out.failures;
    }
  }
  return out;
}

// ---- periodic boundary points ----------------------------------------------------
//
// The landing point of the angle theta = 0.d0 d1 ... d_{q-1} (repeating, base
// b) is the fixed point of the q-fold angle-guided pullback along the digit
// word; the pullback contracts by 1/|(f^q)'| near the landing point.

struct PeriodicPoint {
  std::vector<int> digits;
  int period = 0;
  double theta = 0.0;
  Complex point;
  Complex multiplier;              // (f^q)'(point)
  std::vector<Complex> cycle;      // forward orbit: point, f(point), ...
  int refinement_cycles = 0;

  double chi() const { return std::log(std::abs(multiplier)) / period; }
};

namespace detail {

// Rotation angles theta^{(m)} = angle after m forward shifts, as exact
// rationals rot_m / (b^q - 1).
inline std::vector<double> word_rotation_angles(int b, const std::vector<int>& digits) {
  int q = static_cast<int>(digits.size());
  std::int64_t denom = 1;
  for (int i = 0; i < q; ++i) {
    denom *= b;
    if (denom > (std::int64_t{1} << 52))
      throw SizeGuardError("periodic word too long for exact angle arithmetic");
  }
  denom -= 1;
  std::vector<double> angles(static_cast<std::size_t>(q));
  for (int m = 0; m < q; ++m) {
    std::int64_t num = 0;
    for (int i = 0; i < q; ++i) {
      int d = digits[static_cast<std::size_t>((m + i) % q)];
      num = num * b + d;
    }
    angles[static_cast<std::size_t>(m)] =
        static_cast<double>(num) / static_cast<double>(denom);
  }
  return angles;
}

}  // namespace detail

inline PeriodicPoint periodic_boundary_point(const MapParams& p, const std::vector<int>& digits,
                                             double tol = 1e-13, int max_cycles = 300) {
  if (digits.empty()) throw DomainError("periodic_boundary_point: empty digit word");
  if (digits.size() > 20)
    throw SizeGuardError("periodic_boundary_point: word length exceeds 20");
  for (int d : digits)
    if (d < 0 || d >= p.b)
      throw DomainError("periodic_boundary_point: digit outside [0, b)");
  const int q = static_cast<int>(digits.size());
  std::vector<double> rot = detail::word_rotation_angles(p.b, digits);

  // Start on the geodesic of the word angle, close enough to the boundary
  // that the q-fold pullback is already contracting.
  GeodesicDescent start = geodesic_descent(p, 1e-4, rot[0]);
  PullbackState state;
  state.point = start.point();
  state.theta = start.level_theta[0];
  state.delta = start.final_delta;

  Complex prev = state.point;
  double prev_step = std::numeric_limits<double>::infinity();
  int growth_strikes = 0;
  for (int cycle = 1; cycle <= max_cycles; ++cycle) {
    for (int m = 0; m < q; ++m) {
      // Pulling back walks the rotations in reverse: from angle rot[k] the
      // on-cycle preimage sits at rot[k-1 mod q].
      state = pull_back_once(p, state, rot[static_cast<std::size_t>(q - 1 - m)]);
    }
    double step = std::abs(state.point - prev);
    if (step < tol) {
      PeriodicPoint out;
      out.digits = digits;
      out.period = q;
      out.theta = rot[0];
      out.point = state.point;
      out.refinement_cycles = cycle;
      out.cycle.resize(static_cast<std::size_t>(q));
      Complex mult(1.0, 0.0);
      Complex y = state.point;
      for (int m = 0; m < q; ++m) {
        out.cycle[static_cast<std::size_t>(m)] = y;
        mult *= map_derivative(p, y);
        y = eval_map(p, ComplexValue(y)).value();
      }
      if (std::abs(y - state.point) > 1e-10 * (1.0 + std::abs(mult)))
        throw NonConvergenceError(
            "periodic_boundary_point: refined point does not close up under f^q");
      out.multiplier = mult;
      return out;
    }
    growth_strikes = step > prev_step ? growth_strikes + 1 : 0;
    if (growth_strikes >= 8)
      throw NonContractionError(
          "periodic_boundary_point: q-fold pullback is not contracting toward a fixed point");
    prev_step = step;
    prev = state.point;
  }
  throw NonConvergenceError("periodic_boundary_point: refinement did not converge");
}

// ---- inner preimage tree ----------------------------------------------------------

// All b^depth disk-interior preimages of root under `depth` inverse steps
// (depth-first, lexicographic in branch digits).  Guarded against runaway
// sizes.
inline std::vector<Complex> preimage_tree(const MapParams& p, Complex root, int depth) {
  if (depth < 0) throw DomainError("preimage_tree: depth must be nonnegative");
  double count = std::pow(static_cast<double>(p.b), depth);
  if (count > (1 << 21))
    throw SizeGuardError("preimage_tree: b^depth exceeds the size guard of 2^21 points");
  std::vector<Complex> cur{root};
  for (int level = 0; level < depth; ++level) {
    std::vector<Complex> next;
    next.reserve(cur.size() * static_cast<std::size_t>(p.b));
    for (Complex x : cur) {
      std::vector<Complex> kids = basin_preimages(p, x);
      next.insert(next.end(), kids.begin(), kids.end());
    }
    cur.swap(next);
  }
  return cur;
}

// A depth-n preimage of the boundary fixed point, tagged with its angle word:
// digits d_1..d_n such that the Boettcher angle is 0.d_1 d_2 ... d_n (base b).
struct TreeNode {
  std::vector<int> word;
  double theta = 0.0;
  Complex point;
};

// The b^depth preimages of the boundary fixed point t_c on the boundary of
// the basin of 0, each labeled by its exact base-b angle word.  These are the
// endpoints of the depth-n cylinder subdivision of the boundary under the
// b-adic symbolic coding.  Digits come from the offset-corrected angles, so
// node `w` sits on the geodesic of angle 0.w  (verified against
// boundary_point in the tests).
inline std::vector<TreeNode> preimage_tree_tc(const MapParams& p, int depth) {
  if (depth < 0) throw DomainError("preimage_tree_tc: depth must be nonnegative");
  if (depth > 14) throw SizeGuardError("preimage_tree_tc: depth exceeds 14");
  double count = std::pow(static_cast<double>(p.b), depth);
  if (count > (1 << 21))
    throw SizeGuardError("preimage_tree_tc: b^depth exceeds the size guard of 2^21 points");

  // t_c is real positive with a real positive forward orbit, so its Boettcher
  // offset is exactly zero and its angle is exactly zero.
  PullbackState root;
  root.point = Complex(find_unstable_fixed_point(p).location, 0.0);
  root.theta = 0.0;
  root.delta = 0.0;

  std::vector<TreeNode> leaves;
  leaves.reserve(static_cast<std::size_t>(count));
  std::vector<int> word(static_cast<std::size_t>(depth), 0);

  // Depth-first expansion.  A pullback from angle phi lands at (phi + d)/b,
  // which PREPENDS digit d to the base-b expansion; the recursion digit at
  // level k is therefore the word digit at position depth-1-k, so that the
  // leaf's word (d_1 .. d_n) reads off its angle as 0.d_1 d_2 ... d_n.
  auto expand = [&](auto&& self, const PullbackState& state, int level) -> void {
    if (level == depth) {
      TreeNode node;
      node.word = word;
      node.theta = state.theta;
      node.point = state.point;
      leaves.push_back(std::move(node));
      return;
    }
    PullbackCandidates cands = pullback_candidates(p, state);
    std::vector<std::size_t> by_digit(static_cast<std::size_t>(p.b), SIZE_MAX);
    for (std::size_t j = 0; j < cands.states.size(); ++j) {
      double raw = static_cast<double>(p.b) * cands.states[j].theta - state.theta;
      int d = static_cast<int>(std::llround(raw)) % p.b;
      if (d < 0) d += p.b;
      if (by_digit[static_cast<std::size_t>(d)] != SIZE_MAX)
        throw BranchAmbiguityError("preimage_tree_tc: two candidates claim one digit");
      by_digit[static_cast<std::size_t>(d)] = j;
    }
    for (int d = 0; d < p.b; ++d) {
      word[static_cast<std::size_t>(depth - 1 - level)] = d;
      self(self, cands.states[by_digit[static_cast<std::size_t>(d)]], level + 1);
    }
  };
  expand(expand, root, 0);
  return leaves;
}

}  // namespace dhl
