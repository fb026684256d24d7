#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "dhl/boettcher.hpp"
#include "dhl/free_energy.hpp"
#include "dhl/rng.hpp"

namespace {

using dhl::Complex;
using dhl::ComplexValue;
using dhl::MapParams;
using dhl::TruncationPolicy;

// Independent oracle: plain forward iteration of the defining series
// F(t) = sum_n (2b)^{-n} ln(1 + (f^n t)^b), written without jets or any of the
// library's halting policy.
Complex direct_series(const MapParams& p, Complex t, int terms = 300) {
  Complex acc(0.0, 0.0);
  double weight = 1.0;
  Complex x = t;
  for (int n = 0; n < terms; ++n, weight /= p.two_b()) {
    Complex u = std::pow(x, p.b);
    acc += weight * std::log(1.0 + u);
    if (std::abs(u) < 1e-300) break;
    x = 4.0 * u / ((1.0 + u) * (1.0 + u));
  }
  return acc;
}

// Basin-interior samples: geodesic points at random angle and potential are in
// the basin of 0 by construction.
std::vector<Complex> basin_samples(const MapParams& p, int count, std::uint64_t seed) {
  dhl::SplitMix64 rng(seed);
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    double g = 0.05 + 1.95 * rng.next_unit();
    double theta = rng.next_unit();
    out.push_back(dhl::geodesic_point(p, g, theta));
  }
  return out;
}

}  // namespace

TEST_CASE("series value matches a direct summation oracle", "[free-energy]") {
  TruncationPolicy policy;
  for (int b : {2, 3, 4}) {
    MapParams p(b);
    for (Complex t : basin_samples(p, 40, 7)) {
      Complex expected = direct_series(p, t);
      Complex got = dhl::eval_F_jet(p, t, 0, policy).F();
      REQUIRE(std::abs(got - expected) <= 1e-11 * std::max(1.0, std::abs(expected)));
    }
    // Real points between 0 and the repelling fixed point.
    double tc = dhl::find_unstable_fixed_point(p).location;
    for (double frac : {0.1, 0.4, 0.7, 0.95}) {
      Complex t(frac * tc, 0.0);
      Complex expected = direct_series(p, t);
      Complex got = dhl::eval_F_jet(p, t, 0, policy).F();
      REQUIRE(std::abs(got - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST_CASE("value at t = 1 is 2b ln2 / (2b - 1)", "[free-energy]") {
  // t = 1 is fixed with g(1) = ln 2, so the series telescopes exactly.
  TruncationPolicy policy;
  for (int b : {2, 3, 4, 5}) {
    MapParams p(b);
    double expected = p.two_b() * std::log(2.0) / (p.two_b() - 1.0);
    Complex got = dhl::eval_F_jet(p, Complex(1.0, 0.0), 0, policy).F();
    REQUIRE(std::abs(got - Complex(expected, 0.0)) < 1e-12);
  }
}

TEST_CASE("derivatives agree with finite differences of the value", "[free-energy][jets]") {
  TruncationPolicy policy;
  const double h = 1e-5;
  for (int b : {2, 3}) {
    MapParams p(b);
    double tc = dhl::find_unstable_fixed_point(p).location;
    for (double frac : {0.2, 0.5, 0.8}) {
      Complex t(frac * tc, 0.0);
      dhl::FJet jet = dhl::eval_F_jet(p, t, 3, policy);

      Complex fd1 = (dhl::eval_F_jet(p, t + h, 0, policy).F() -
                     dhl::eval_F_jet(p, t - h, 0, policy).F()) /
                    (2.0 * h);
      REQUIRE(std::abs(jet.F1() - fd1) <= 1e-6 * std::max(1.0, std::abs(fd1)));

      Complex fd2 = (dhl::eval_F_jet(p, t + h, 1, policy).F1() -
                     dhl::eval_F_jet(p, t - h, 1, policy).F1()) /
                    (2.0 * h);
      REQUIRE(std::abs(jet.F2() - fd2) <= 1e-5 * std::max(1.0, std::abs(fd2)));

      Complex fd3 = (dhl::eval_F_jet(p, t + h, 2, policy).F2() -
                     dhl::eval_F_jet(p, t - h, 2, policy).F2()) /
                    (2.0 * h);
      REQUIRE(std::abs(jet.derivative(3) - fd3) <= 1e-4 * std::max(1.0, std::abs(fd3)));
    }
  }
}

TEST_CASE("tightening the tolerance does not move the value", "[free-energy]") {
  MapParams p(3);
  TruncationPolicy loose;
  loose.tol = 1e-10;
  TruncationPolicy tight;
  tight.tol = 1e-13;
  for (Complex t : basin_samples(p, 25, 19)) {
    Complex a = dhl::eval_F_jet(p, t, 2, loose).F2();
    Complex c = dhl::eval_F_jet(p, t, 2, tight).F2();
    REQUIRE(std::abs(a - c) <= 1e-8 * std::max(1.0, std::abs(c)));
  }
}

TEST_CASE("transfer identities hold to truncation accuracy", "[free-energy][residuals]") {
  TruncationPolicy policy;
  for (int b : {2, 3, 4}) {
    MapParams p(b);
    for (Complex t : basin_samples(p, 60, 31)) {
      dhl::FunctionalResiduals r = dhl::functional_residuals(p, t, policy);
      REQUIRE(std::abs(r.r0) < 1e-9);
      REQUIRE(std::abs(r.r1) < 1e-8);
      REQUIRE(std::abs(r.r2) < 1e-8);
    }
  }
}

TEST_CASE("second derivative solves the inhomogeneous transfer equation", "[free-energy]") {
  // Three routes to the same number: the order-2 jet of the series, the
  // weighted orbit sum U, and (at the fixed point) the closed form
  // h / (1 - beta) obtained from stationarity.
  TruncationPolicy policy;
  for (int b : {2, 3}) {
    MapParams p(b);
    dhl::FixedPointInfo fp = dhl::find_unstable_fixed_point(p);

    for (double offset : {0.05, 0.15, 0.30}) {
      Complex t(fp.location - offset, 0.0);
      Complex via_jet = dhl::eval_F_jet(p, t, 2, policy).F2();
      Complex via_sum = dhl::cocycle_solution_U(p, t, policy);
      REQUIRE(std::abs(via_jet - via_sum) <= 1e-7 * std::max(1.0, std::abs(via_jet)));
    }

    Complex tc(fp.location, 0.0);
    Complex beta = dhl::beta_weight(p, tc);
    Complex h = dhl::cocycle_inhomogeneity(p, tc, policy);
    Complex closed = h / (1.0 - beta);
    Complex via_jet = dhl::eval_F_jet(p, tc, 2, policy).F2();
    REQUIRE(std::abs(via_jet - closed) <= 1e-7 * std::max(1.0, std::abs(closed)));
  }

  // Frozen spot value at the b = 3 fixed point.
  MapParams p3(3);
  Complex tc3(dhl::find_unstable_fixed_point(p3).location, 0.0);
  Complex u3 = dhl::eval_F_jet(p3, tc3, 2, policy).F2();
  REQUIRE(u3.real() == Catch::Approx(3.9979).margin(5e-4));
  REQUIRE(std::abs(u3.imag()) < 1e-10);
}

TEST_CASE("weight of one renormalization step", "[free-energy]") {
  MapParams p(3);
  dhl::SplitMix64 rng(43);
  for (int i = 0; i < 30; ++i) {
    Complex t(0.9 * (rng.next_unit() - 0.5), 0.9 * (rng.next_unit() - 0.5));
    if (std::abs(1.0 + std::pow(t, 3)) < 0.1) continue;
    Complex d = dhl::map_derivative(p, t);
    REQUIRE(std::abs(dhl::beta_weight(p, t) - d * d / 6.0) < 1e-14 * std::max(1.0, std::abs(d * d)));
  }

  // At the fixed point the weight is below one for b = 3: bounded second
  // derivative along the real approach.
  double tc = dhl::find_unstable_fixed_point(p).location;
  double beta_tc = dhl::beta_weight(p, Complex(tc, 0.0)).real();
  REQUIRE(beta_tc == Catch::Approx(0.5730).margin(5e-4));
  REQUIRE(beta_tc < 1.0);
}

TEST_CASE("physical wrapper assembles coupling and temperature correctly", "[free-energy]") {
  MapParams p(2);
  TruncationPolicy policy;
  dhl::PhysicalParams phys;
  phys.J = Complex(1.0, 0.0);
  phys.T = Complex(2.5, 0.0);
  dhl::PhysicalFreeEnergy out = dhl::eval_physical_free_energy(p, phys, policy);

  Complex t0 = std::exp(-2.0 * phys.J / (static_cast<double>(p.b) * phys.T));
  REQUIRE(std::abs(out.t0 - t0) < 1e-14);
  Complex expected = -phys.J / 2.0 - phys.T / 2.0 * dhl::eval_F_jet(p, t0, 0, policy).F();
  REQUIRE(std::abs(out.value - expected) < 1e-13);
}

TEST_CASE("exhausting the term budget raises a truncation failure", "[free-energy][errors]") {
  MapParams p(2);
  TruncationPolicy tiny;
  tiny.max_terms = 3;
  // A boundary-adjacent point needs far more than three terms to settle.
  Complex t = dhl::geodesic_point(p, 1e-3, 0.37);
  REQUIRE_THROWS_AS(dhl::eval_F_jet(p, t, 2, tiny), dhl::TruncationFailure);
}

TEST_CASE("policy validation rejects nonsense", "[free-energy][errors]") {
  TruncationPolicy bad;
  bad.tol = -1.0;
  REQUIRE_THROWS_AS(bad.validate(), dhl::DomainError);
  TruncationPolicy bad2;
  bad2.max_terms = 0;
  REQUIRE_THROWS_AS(bad2.validate(), dhl::DomainError);
  TruncationPolicy bad3;
  bad3.stop_radius = 1.0;
  REQUIRE_THROWS_AS(bad3.validate(), dhl::DomainError);
}
