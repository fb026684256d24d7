#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dhl/boettcher.hpp"
#include "dhl/errors.hpp"
#include "dhl/free_energy.hpp"
#include "dhl/jets.hpp"
#include "dhl/parallel.hpp"
#include "dhl/rational_map.hpp"
#include "dhl/rng.hpp"
#include "dhl/thermo.hpp"

namespace dhl {

// ---- exponent prediction --------------------------------------------------------
//
// The free energy scales with exponent omega = ln(2b)/chi along an approach
// with Lyapunov rate chi: F = regular + dist^omega * (log-periodic).  The
// derivative order m = floor(omega) + 1 is the first one that diverges, like
// dist^{-alpha} with alpha = m - omega in (0, 1).

struct ExponentPrediction {
  double log_degeneracy = 0.0;  // ln 2b
  double chi = 0.0;
  double omega = 0.0;
  int m = 0;
  double alpha = 0.0;
};

inline ExponentPrediction predict_exponent(double log_degeneracy, double chi) {
  if (!(chi > 0.0)) throw DomainError("predict_exponent: chi must be positive");
  ExponentPrediction out;
  out.log_degeneracy = log_degeneracy;
  out.chi = chi;
  out.omega = log_degeneracy / chi;
  if (std::abs(out.omega - std::round(out.omega)) < 1e-6)
    throw NearIntegerResonance(
        "predict_exponent: scaling exponent is within 1e-6 of an integer; "
        "the power law degenerates to a logarithm");
  out.m = static_cast<int>(std::floor(out.omega)) + 1;
  out.alpha = out.m - out.omega;
  return out;
}

// The headline prediction for boundary approaches weighted by harmonic
// measure (chi = ln b): alpha = 1 - ln 2 / ln b, order m = 2.  For b = 2 the
// ratio ln 2b / ln b = 2 is an exact integer and the prediction degenerates.
inline ExponentPrediction harmonic_exponent_prediction(const MapParams& p) {
  return predict_exponent(std::log(p.two_b()), std::log(static_cast<double>(p.b)));
}

// ---- small statistics helpers -----------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  int n = 0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys,
                        std::size_t skip = 0) {
  if (xs.size() != ys.size()) throw DomainError("fit_line: length mismatch");
  if (xs.size() < skip + 2) throw DomainError("fit_line: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = skip; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    ++n;
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw DomainError("fit_line: degenerate abscissae");
  LineFit f;
  f.n = n;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = skip; i < xs.size(); ++i) {
    double r = ys[i] - (f.slope * xs[i] + f.intercept);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  return f;
}

// A reported regression against a predicted exponent.  Any reported fit rests
// on at least 6 points.
struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  int n_points = 0;
  double predicted = 0.0;
  std::string method;  // "envelope" or "plain"
};

inline ExponentFit make_exponent_fit(const LineFit& f, double predicted,
                                     const std::string& method) {
  if (f.n < 6) throw DomainError("exponent fit: need at least 6 fitted points");
  ExponentFit out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.rms_residual = f.rms_residual;
  out.n_points = f.n;
  out.predicted = predicted;
  out.method = method;
  return out;
}

inline std::vector<double> running_envelope(const std::vector<double>& y) {
  std::vector<double> env(y.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < y.size(); ++i) {
    m = std::max(m, y[i]);
    env[i] = m;
  }
  return env;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw DomainError("median_of: empty sample");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double interquartile_range(std::vector<double> v) {
  if (v.size() < 4) throw DomainError("interquartile_range: need at least 4 samples");
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    double pos = q * (static_cast<double>(v.size()) - 1.0);
    std::size_t lo = static_cast<std::size_t>(pos);
    double fracpart = pos - static_cast<double>(lo);
    return lo + 1 < v.size() ? v[lo] * (1.0 - fracpart) + v[lo + 1] * fracpart : v[lo];
  };
  return quantile(0.75) - quantile(0.25);
}

// ---- complex approach along geodesics ----------------------------------------------
//
// Along the angle-theta geodesic at potentials g_k = g0 b^{-k}, the second
// derivative of the free energy grows like (1 - r)^{-alpha} with
// r = exp(-g); the envelope of ln|F''| against x = -ln(1 - r) has slope
// alpha = 1 - ln 2 / ln b for typical angles.  The envelope (running max)
// estimates a lim sup: the pointwise sequence oscillates as the backward
// orbit wanders.

struct ComplexExponentOptions {
  int angles = 50;
  int levels = 16;
  double base_potential = 0.6931471805599453;  // ln 2: |psi| = 1/2 at level 0
  std::size_t fit_skip = 2;
  std::uint64_t seed = 12345;
  int jobs = 1;

  void validate() const {
    if (angles < 1) throw DomainError("ComplexExponentOptions: need at least one angle");
    if (levels > 18) throw SizeGuardError("ComplexExponentOptions: levels exceed 18");
    if (static_cast<std::size_t>(levels) < fit_skip + 6)
      throw DomainError("ComplexExponentOptions: too few levels for a 6-point fit");
    if (!(base_potential > 0.0))
      throw DomainError("ComplexExponentOptions: base potential must be positive");
  }
};

struct AngleSeries {
  double theta = 0.0;
  bool ok = false;
  std::vector<double> x;         // -ln(1 - e^{-g_k})
  std::vector<double> y;         // ln |F''|
  std::vector<double> envelope;  // running max of y
  LineFit fit;
};

struct ComplexExponentResult {
  ComplexExponentOptions options;
  double predicted_alpha = 0.0;  // 1 - ln 2 / ln b
  std::vector<AngleSeries> series;
  std::vector<double> slopes;  // fits of the angles that succeeded
  int failures = 0;
  double median_slope = 0.0;
  double slope_iqr = 0.0;
};

inline AngleSeries complex_exponent_series(const MapParams& p, double theta,
                                           const ComplexExponentOptions& opt) {
  AngleSeries s;
  s.theta = theta;
  s.x.resize(static_cast<std::size_t>(opt.levels));
  s.y.resize(static_cast<std::size_t>(opt.levels));
  double g = opt.base_potential;
  for (int k = 0; k < opt.levels; ++k, g /= p.b) {
    Complex t = geodesic_point(p, g, theta);
    TruncationPolicy policy = TruncationPolicy::near_boundary(p, g);
    Complex f2 = eval_F_jet(p, t, 2, policy).F2();
    s.x[static_cast<std::size_t>(k)] = -std::log(-std::expm1(-g));
    s.y[static_cast<std::size_t>(k)] = std::log(std::abs(f2));
  }
  s.envelope = running_envelope(s.y);
  s.fit = fit_line(s.x, s.envelope, opt.fit_skip);
  s.ok = true;
  return s;
}

inline ComplexExponentResult complex_exponent_experiment(const MapParams& p,
                                                         const ComplexExponentOptions& opt) {
  opt.validate();
  ComplexExponentResult out;
  out.options = opt;
  out.predicted_alpha = 1.0 - std::log(2.0) / std::log(static_cast<double>(p.b));
  out.series.resize(static_cast<std::size_t>(opt.angles));
  parallel_for(static_cast<std::size_t>(opt.angles), opt.jobs, [&](std::size_t i) {
    SplitMix64 rng(per_sample_seed(opt.seed, static_cast<std::uint64_t>(i)));
    double theta = rng.next_unit();
    try {
      out.series[i] = complex_exponent_series(p, theta, opt);
    } catch (const Error&) {
      out.series[i].theta = theta;
      out.series[i].ok = false;
    }
  });
  out.slopes.reserve(out.series.size());
  for (const AngleSeries& s : out.series) {
    if (s.ok)
      out.slopes.push_back(s.fit.slope);
    else
      ++out.failures;
  }
  if (out.slopes.empty())
    throw NonConvergenceError("complex_exponent_experiment: every angle failed");
  out.median_slope = median_of(out.slopes);
  out.slope_iqr = out.slopes.size() >= 4 ? interquartile_range(out.slopes) : 0.0;
  return out;
}

// ---- real approach to the repelling fixed point -------------------------------------
//
// Along t_k = t_c - r0 lambda^{-k} the m-th derivative splits as
// regular + dist^{-alpha} * (log-periodic) with alpha = m - ln(2b)/ln lambda.
// The grid spacing in x = -ln(t_c - t) equals ln lambda exactly, so the
// log-periodic modulation contributes a constant factor at every level.  Two
// fits are reported: the direct one on ln|F^(m)| ("plain"), and one on the
// level-to-level differences of F^(m), which cancel the regular part exactly
// and expose the singular power law from the first levels on.

struct RealExponentOptions {
  int levels = 18;
  std::size_t fit_skip = 4;
  double r0 = 0.05;

  void validate() const {
    if (levels > 18) throw SizeGuardError("RealExponentOptions: levels exceed 18");
    if (static_cast<std::size_t>(levels) < fit_skip + 7)
      throw DomainError("RealExponentOptions: too few levels for a 6-point fit");
    if (!(r0 > 0.0)) throw DomainError("RealExponentOptions: r0 must be positive");
  }
};

struct RealExponentResult {
  double t_c = 0.0;
  double lambda = 0.0;
  ExponentPrediction prediction;
  std::vector<double> x;       // -ln(t_c - t_k)
  std::vector<double> y;       // ln |F^(m)(t_k)|
  std::vector<double> x_diff;  // abscissae for the differenced series
  std::vector<double> y_diff;  // ln |F^(m)(t_{k+1}) - F^(m)(t_k)|
  ExponentFit fit;             // on the differenced series (regular part removed)
  ExponentFit fit_plain;       // on the raw series
};

inline RealExponentResult real_exponent_at_tc(const MapParams& p,
                                              const RealExponentOptions& opt = {}) {
  opt.validate();
  RealExponentResult out;
  FixedPointInfo fp = find_unstable_fixed_point(p);
  out.t_c = fp.location;
  out.lambda = fp.multiplier;
  out.prediction = predict_exponent(std::log(p.two_b()), std::log(fp.multiplier));
  if (out.prediction.m > Jet::kMaxOrder)
    throw UnsupportedOrderError("real_exponent_at_tc: required derivative order "
                                "exceeds the jet order limit");
  TruncationPolicy policy;
  policy.max_terms = opt.levels + 150;
  out.x.resize(static_cast<std::size_t>(opt.levels));
  out.y.resize(static_cast<std::size_t>(opt.levels));
  std::vector<double> fm(static_cast<std::size_t>(opt.levels));
  double r = opt.r0;
  for (int k = 0; k < opt.levels; ++k, r /= out.lambda) {
    double t = out.t_c - r;
    if (!(t > 0.0)) throw DomainError("real_exponent_at_tc: r0 too large");
    FJet Fj = eval_F_jet(p, Complex(t, 0.0), out.prediction.m, policy);
    double v = Fj.derivative(out.prediction.m).real();
    fm[static_cast<std::size_t>(k)] = v;
    out.x[static_cast<std::size_t>(k)] = -std::log(r);
    out.y[static_cast<std::size_t>(k)] = std::log(std::abs(v));
  }
  for (int k = 0; k + 1 < opt.levels; ++k) {
    double diff = fm[static_cast<std::size_t>(k) + 1] - fm[static_cast<std::size_t>(k)];
    out.x_diff.push_back(out.x[static_cast<std::size_t>(k)]);
    out.y_diff.push_back(std::log(std::abs(diff)));
  }
  out.fit = make_exponent_fit(fit_line(out.x_diff, out.y_diff, opt.fit_skip),
                              out.prediction.alpha, "plain");
  out.fit_plain = make_exponent_fit(fit_line(out.x, out.y, opt.fit_skip),
                                    out.prediction.alpha, "plain");
  return out;
}

// ---- approach along a periodic boundary word -----------------------------------------
//
// Pulling back along a repeating digit word approaches its landing point x_w
// at rate chi_w = ln|(f^q)'|/q; the m_w-th derivative of F grows like
// dist^{-alpha_w} with alpha_w = m_w - ln(2b)/chi_w, measured against the
// distance to the landing point (along the geodesic the hyperbolic and
// euclidean approach rates agree up to bounded factors).

struct PeriodicExponentOptions {
  double start_potential = 1e-2;
  int max_cycles = 200;
  double min_distance = 5e-13;

  void validate() const {
    if (!(start_potential > 0.0))
      throw DomainError("PeriodicExponentOptions: start potential must be positive");
    if (max_cycles < 1) throw DomainError("PeriodicExponentOptions: need at least one cycle");
  }
};

struct PeriodicExponentResult {
  PeriodicPoint landing;
  ExponentPrediction prediction;
  std::vector<double> x;  // -ln |t_k - x_w|
  std::vector<double> y;  // ln |F^(m_w)|
  ExponentFit fit;
};

inline PeriodicExponentResult periodic_exponent_experiment(const MapParams& p,
                                                           const std::vector<int>& digits,
                                                           const PeriodicExponentOptions& opt = {}) {
  opt.validate();
  if (digits.size() > 8)
    throw SizeGuardError("periodic_exponent_experiment: word length exceeds 8");
  PeriodicExponentResult out;
  out.landing = periodic_boundary_point(p, digits);
  out.prediction = predict_exponent(std::log(p.two_b()), out.landing.chi());
  if (out.prediction.m > Jet::kMaxOrder)
    throw UnsupportedOrderError("periodic_exponent_experiment: required derivative order "
                                "exceeds the jet order limit");
  const int q = out.landing.period;
  std::vector<double> rot = detail::word_rotation_angles(p.b, digits);

  GeodesicDescent start = geodesic_descent(p, opt.start_potential, rot[0]);
  PullbackState state;
  state.point = start.point();
  state.theta = start.level_theta[0];
  state.delta = start.final_delta;

  double potential = opt.start_potential;
  for (int cycle = 0; cycle < opt.max_cycles; ++cycle) {
    for (int m = 0; m < q; ++m)
      state = pull_back_once(p, state, rot[static_cast<std::size_t>(q - 1 - m)]);
    potential /= std::pow(static_cast<double>(p.b), q);
    double dist = std::abs(state.point - out.landing.point);
    if (dist < opt.min_distance) break;
    TruncationPolicy policy = TruncationPolicy::near_boundary(p, potential);
    FJet Fj = eval_F_jet(p, state.point, out.prediction.m, policy);
    out.x.push_back(-std::log(dist));
    out.y.push_back(std::log(std::abs(Fj.derivative(out.prediction.m))));
  }
  if (out.x.size() < 9)
    throw NonConvergenceError("periodic_exponent_experiment: too few usable levels");
  out.fit = make_exponent_fit(fit_line(out.x, out.y, out.x.size() / 3),
                              out.prediction.alpha, "plain");
  return out;
}

}  // namespace dhl
