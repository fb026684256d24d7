#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

#include "dhl/boettcher.hpp"
#include "dhl/complex_sphere.hpp"
#include "dhl/errors.hpp"
#include "dhl/free_energy.hpp"
#include "dhl/parallel.hpp"
#include "dhl/rational_map.hpp"
#include "dhl/rng.hpp"

namespace dhl {

// ---- Birkhoff sums ---------------------------------------------------------------
//
// S_n rho (t) = sum_{k=0}^{n-1} rho(f^k t), half-open on the right so that
// S_{n+m}(t) = S_n(t) + S_m(f^n t) exactly.  rho is any callable of Complex;
// pole encounters inside rho surface as whatever rho throws.

template <typename Rho>
auto birkhoff_sum(const MapParams& p, Rho&& rho, Complex t, int n)
    -> std::decay_t<decltype(rho(t))> {
  if (n < 0) throw DomainError("birkhoff_sum: n must be nonnegative");
  std::decay_t<decltype(rho(t))> acc{};
  Complex y = t;
  for (int k = 0; k < n; ++k) {
    acc += rho(y);
    y = eval_map(p, ComplexValue(y)).value();
  }
  return acc;
}

// ---- Lyapunov exponent of harmonic measure -------------------------------------
//
// chi = E[ln |f'|] over boundary points sampled by uniform Boettcher angle.
// The exact value is ln b.  Per-sample seeding keeps the estimate independent
// of the worker count; samples whose pullback fails are excluded and counted.

struct LyapunovEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  int samples = 0;   // accepted samples
  int failures = 0;  // excluded samples
  double exact = 0.0;  // ln b
};

inline LyapunovEstimate harmonic_lyapunov_estimate(const MapParams& p, int samples,
                                                   std::uint64_t seed, double potential = 1e-7,
                                                   int jobs = 1) {
  if (samples < 100) throw DomainError("harmonic_lyapunov_estimate: need at least 100 samples");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> vals(static_cast<std::size_t>(samples), nan);
  parallel_for(static_cast<std::size_t>(samples), jobs, [&](std::size_t i) {
    SplitMix64 rng(per_sample_seed(seed, static_cast<std::uint64_t>(i)));
    double theta = rng.next_unit();
    try {
      Complex t = geodesic_point(p, potential, theta);
      vals[i] = std::log(std::abs(map_derivative(p, t)));
    } catch (const Error&) {
      // excluded; stays NaN
    }
  });
  LyapunovEstimate out;
  out.exact = std::log(static_cast<double>(p.b));
  double sum = 0.0;
  for (double v : vals) {
    if (std::isnan(v)) {
      ++out.failures;
    } else {
      sum += v;
      ++out.samples;
    }
  }
  if (out.samples == 0)
    throw NonConvergenceError("harmonic_lyapunov_estimate: every sample failed");
  out.mean = sum / out.samples;
  double ss = 0.0;
  for (double v : vals)
    if (!std::isnan(v)) ss += (v - out.mean) * (v - out.mean);
  out.standard_error =
      out.samples > 1 ? std::sqrt(ss / (out.samples - 1.0) / out.samples) : 0.0;
  return out;
}

// ---- pressure over the inner preimage tree ---------------------------------------
//
// P_n(kappa) = (1/n) ln sum_{y in f^{-n}(t_c) inner tree} |beta_n(y)|^{-kappa},
// beta_n(y) = prod_{k<n} beta(f^k y), beta = (f')^2/(2b).  Evaluated by one
// depth-first walk with a streaming log-sum-exp per kappa.  P_n(0) = ln b
// identically (b^n unit terms), returned exactly.

struct PressureEstimate {
  double kappa = 0.0;
  int depth = 0;
  double value = 0.0;
  std::int64_t support_size = 0;  // b^depth
};

struct PressureCurve {
  int depth = 0;
  std::vector<double> kappa;
  std::vector<double> value;
};

namespace detail {

struct LogSumExp {
  double max_exponent = -std::numeric_limits<double>::infinity();
  double scaled_sum = 0.0;

  void add(double v) {
    if (v <= max_exponent) {
      scaled_sum += std::exp(v - max_exponent);
    } else {
      scaled_sum = scaled_sum * std::exp(max_exponent - v) + 1.0;
      max_exponent = v;
    }
  }
  double result() const { return max_exponent + std::log(scaled_sum); }
};

inline void pressure_walk(const MapParams& p, Complex x, double path_log_beta, int remaining,
                          const std::vector<double>& kappas, std::vector<LogSumExp>& acc) {
  if (remaining == 0) {
    for (std::size_t i = 0; i < kappas.size(); ++i)
      if (kappas[i] != 0.0) acc[i].add(-kappas[i] * path_log_beta);
    return;
  }
  std::vector<Complex> kids = basin_preimages(p, x);
  const double log_two_b = std::log(p.two_b());
  for (Complex y : kids) {
    double lb = 2.0 * std::log(std::abs(map_derivative(p, y))) - log_two_b;
    pressure_walk(p, y, path_log_beta + lb, remaining - 1, kappas, acc);
  }
}

inline void pressure_depth_guard(const MapParams& p, int depth) {
  if (depth < 1) throw DomainError("pressure estimate: depth must be >= 1");
  if (depth > 14) throw SizeGuardError("pressure estimate: depth exceeds 14");
  double leaves = std::pow(static_cast<double>(p.b), depth);
  if (leaves > 4.5e7) throw SizeGuardError("pressure estimate: b^depth exceeds the size guard");
}

}  // namespace detail

inline PressureCurve pressure_curve(const MapParams& p, int depth,
                                    const std::vector<double>& kappas) {
  detail::pressure_depth_guard(p, depth);
  for (double k : kappas)
    if (!(k >= 0.0)) throw DomainError("pressure_curve: kappa must be >= 0");
  Complex root(find_unstable_fixed_point(p).location, 0.0);
  std::vector<detail::LogSumExp> acc(kappas.size());
  detail::pressure_walk(p, root, 0.0, depth, kappas, acc);
  PressureCurve out;
  out.depth = depth;
  out.kappa = kappas;
  out.value.resize(kappas.size());
  for (std::size_t i = 0; i < kappas.size(); ++i)
    out.value[i] = kappas[i] == 0.0 ? std::log(static_cast<double>(p.b))
                                    : acc[i].result() / depth;
  return out;
}

inline PressureEstimate pressure_estimate(const MapParams& p, double kappa, int depth) {
  PressureCurve c = pressure_curve(p, depth, {kappa});
  PressureEstimate out;
  out.kappa = kappa;
  out.depth = depth;
  out.value = c.value[0];
  out.support_size = 1;
  for (int i = 0; i < depth; ++i) out.support_size *= p.b;
  return out;
}

// ---- pressure slope at kappa = 0 ---------------------------------------------------
//
// The exact derivative of P_n at 0 is -(1/n) * mean over leaves of
// ln|beta_n|; as an estimator of the limit slope -ln(b/2) it carries an
// intrinsic O(1/n) bias from the shallow part of every path (the points near
// t_c contribute ln beta(t_c) < the measure-typical mean).  The level
// increment  n P_n'(0) - (n-1) P_{n-1}'(0)  cancels the shallow part exactly
// and equals minus the mean of ln|beta| over the deepest step only, whose
// distribution equidistributes geometrically; it converges to -ln(b/2) at a
// geometric rate and is the estimator reported as `value`.

struct PressureSlope {
  int depth = 0;
  double value = 0.0;  // telescoped level-increment estimator
  double plain = 0.0;  // -(1/n) mean path log beta (biased by O(1/n))
};

namespace detail {

inline void slope_walk(const MapParams& p, Complex x, double path_log_beta, int remaining,
                       double& sum_full, double& sum_last) {
  std::vector<Complex> kids = basin_preimages(p, x);
  const double log_two_b = std::log(p.two_b());
  for (Complex y : kids) {
    double lb = 2.0 * std::log(std::abs(map_derivative(p, y))) - log_two_b;
    if (remaining == 1) {
      sum_full += path_log_beta + lb;
      sum_last += lb;
    } else {
      slope_walk(p, y, path_log_beta + lb, remaining - 1, sum_full, sum_last);
    }
  }
}

}  // namespace detail

inline PressureSlope pressure_slope_at_zero(const MapParams& p, int depth) {
  detail::pressure_depth_guard(p, depth);
  Complex root(find_unstable_fixed_point(p).location, 0.0);
  double sum_full = 0.0, sum_last = 0.0;
  detail::slope_walk(p, root, 0.0, depth, sum_full, sum_last);
  double leaves = std::pow(static_cast<double>(p.b), depth);
  PressureSlope out;
  out.depth = depth;
  out.value = -(sum_last / leaves);
  out.plain = -(sum_full / leaves) / depth;
  return out;
}

// ---- expansion statistic in the logarithmic metric --------------------------------
//
// sup |t f'(t) / f(t)| over the inner region is at most sqrt(2) b.  The
// statistic samples geodesic points across dyadically spread potentials and
// uniform angles and reports the observed supremum.

struct ExpansionStatistic {
  double observed_sup = 0.0;
  double bound = 0.0;  // sqrt(2) * b
  int samples = 0;
};

inline ExpansionStatistic metric_expansion_statistic(const MapParams& p, int samples,
                                                     std::uint64_t seed, int jobs = 1) {
  std::vector<double> vals(static_cast<std::size_t>(samples));
  const double g_lo = std::log(1e-5);
  const double g_hi = std::log(2.0);
  parallel_for(static_cast<std::size_t>(samples), jobs, [&](std::size_t i) {
    SplitMix64 rng(per_sample_seed(seed, static_cast<std::uint64_t>(i)));
    double g = std::exp(g_lo + (g_hi - g_lo) * rng.next_unit());
    double theta = rng.next_unit();
    Complex t = geodesic_point(p, g, theta);
    Complex ft = eval_map(p, ComplexValue(t)).value();
    vals[i] = std::abs(t * map_derivative(p, t) / ft);
  });
  ExpansionStatistic out;
  out.samples = samples;
  out.bound = std::sqrt(2.0) * p.b;
  for (double v : vals) out.observed_sup = std::max(out.observed_sup, v);
  return out;
}

// ---- random backward orbits --------------------------------------------------------
//
// A backward orbit y_{-1}, y_{-2}, ... from a boundary point picks a uniform
// branch digit at each pullback (the balanced measure's backward process on
// the boundary).  The inverse cocycle ln|beta_{-k}| = -sum_{j<=k}
// ln|beta(y_{-j})| has mean rate -ln(b/2); weighting the inhomogeneity h
// along the orbit gives the backward series for the second derivative, whose
// partial sums converge geometrically with ratio about 2/b on average.

struct BackwardSample {
  double theta_start = 0.0;
  Complex root;
  std::vector<int> digits;               // branch indices consumed
  std::vector<Complex> points;           // y_{-1} .. y_{-n}
  std::vector<double> log_beta_inverse;  // ln|beta_{-k}|, k = 1..n
  std::vector<double> rates;             // (1/k) ln|beta_{-k}|
  std::vector<Complex> g_partials;       // G_m = -sum_{k<=m} beta_{-k} h(y_{-k})

  double mean_rate() const { return rates.empty() ? 0.0 : rates.back(); }
};

inline BackwardSample backward_cocycle_sample(const MapParams& p, double theta_start, int steps,
                                              std::uint64_t seed,
                                              const TruncationPolicy& policy = {}) {
  if (steps < 1) throw DomainError("backward_cocycle_sample: steps must be >= 1");
  if (steps > 200) throw SizeGuardError("backward_cocycle_sample: steps exceed 200");
  BackwardSample out;
  out.theta_start = frac_turn(theta_start);
  out.root = boundary_point(p, out.theta_start);
  out.digits.reserve(static_cast<std::size_t>(steps));
  out.points.reserve(static_cast<std::size_t>(steps));
  out.log_beta_inverse.reserve(static_cast<std::size_t>(steps));
  out.rates.reserve(static_cast<std::size_t>(steps));
  out.g_partials.reserve(static_cast<std::size_t>(steps));
  SplitMix64 rng(seed);
  Complex y = out.root;
  double acc = 0.0;
  Complex series(0.0, 0.0);
  Complex weight(1.0, 0.0);  // beta_{-k} = prod_{j<=k} 1/beta(y_{-j})
  const double log_two_b = std::log(p.two_b());
  for (int k = 1; k <= steps; ++k) {
    std::vector<Complex> kids = basin_preimages(p, y);
    int digit = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(p.b)));
    y = kids[static_cast<std::size_t>(digit)];
    acc -= 2.0 * std::log(std::abs(map_derivative(p, y))) - log_two_b;
    weight /= beta_weight(p, y);
    series -= weight * cocycle_inhomogeneity(p, y, policy);
    out.digits.push_back(digit);
    out.points.push_back(y);
    out.log_beta_inverse.push_back(acc);
    out.rates.push_back(acc / k);
    out.g_partials.push_back(series);
  }
  return out;
}

// ---- periodic-orbit spectral bound ---------------------------------------------------
//
// A lower bound for the logarithm of the spectral radius of the weighted
// transfer operator acting on second derivatives: max over short periodic
// boundary words w of  2 chi_w - ln 2b.  A positive value certifies unbounded
// second derivatives along generic boundary approaches.  Words whose periodic
// point refinement fails to contract are skipped and counted.

struct SpectralBound {
  double log_radius_lower = -std::numeric_limits<double>::infinity();
  std::vector<int> best_word;
  int words_checked = 0;
  int words_skipped = 0;
};

// Aperiodic necklace representatives (lexicographically minimal rotations)
// of length exactly q over digits {0..b-1}.
inline std::vector<std::vector<int>> lyndon_words(int b, int q) {
  std::vector<std::vector<int>> out;
  std::vector<int> w(static_cast<std::size_t>(q));
  std::int64_t total = 1;
  for (int i = 0; i < q; ++i) total *= b;
  for (std::int64_t code = 0; code < total; ++code) {
    std::int64_t c = code;
    for (int i = q - 1; i >= 0; --i) {
      w[static_cast<std::size_t>(i)] = static_cast<int>(c % b);
      c /= b;
    }
    bool minimal = true, aperiodic = true;
    for (int r = 1; r < q && minimal; ++r) {
      int cmp = 0;  // compare w with its rotation by r
      for (int i = 0; i < q; ++i) {
        int a = w[static_cast<std::size_t>(i)];
        int bb = w[static_cast<std::size_t>((i + r) % q)];
        if (a != bb) {
          cmp = a < bb ? -1 : 1;
          break;
        }
      }
      if (cmp > 0) minimal = false;
      if (cmp == 0) aperiodic = false;
    }
    if (minimal && aperiodic) out.push_back(w);
  }
  return out;
}

inline SpectralBound spectral_radius_lower_bound(const MapParams& p, int max_length) {
  if (max_length < 1) throw DomainError("spectral_radius_lower_bound: max_length must be >= 1");
  if (max_length > 12) throw SizeGuardError("spectral_radius_lower_bound: max_length exceeds 12");
  SpectralBound out;
  const double log_two_b = std::log(p.two_b());
  for (int q = 1; q <= max_length; ++q) {
    for (const std::vector<int>& w : lyndon_words(p.b, q)) {
      ++out.words_checked;
      double v;
      try {
        PeriodicPoint pt = periodic_boundary_point(p, w);
        v = 2.0 * pt.chi() - log_two_b;
      } catch (const NonContractionError&) {
        ++out.words_skipped;
        continue;
      }
      if (v > out.log_radius_lower) {
        out.log_radius_lower = v;
        out.best_word = w;
      }
    }
  }
  return out;
}

}  // namespace dhl
