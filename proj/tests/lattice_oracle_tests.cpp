#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "dhl/lattice_oracle.hpp"

namespace {

// Brute-force oracle: enumerate every spin configuration directly (no Gray
// code, no pinning) in extended precision.
double log_partition_brute(const dhl::LatticeGraph& g, double coupling) {
  REQUIRE(g.sites <= 14);
  const double shift = std::abs(coupling) * static_cast<double>(g.bonds.size());
  long double acc = 0.0L;
  for (std::uint32_t mask = 0; mask < (1u << g.sites); ++mask) {
    int energy = 0;
    for (auto [u, v] : g.bonds) {
      int su = (mask >> u) & 1 ? 1 : -1;
      int sv = (mask >> v) & 1 ? 1 : -1;
      energy += su * sv;
    }
    acc += std::exp(static_cast<long double>(coupling * energy - shift));
  }
  return static_cast<double>(std::log(acc)) + shift;
}

}  // namespace

TEST_CASE("hierarchical construction: sites, bonds, connectivity, bipartiteness",
          "[lattice][graph]") {
  struct Expect {
    int b, level, sites;
    std::int64_t bonds;
  };
  for (Expect e : {Expect{2, 0, 2, 1}, Expect{2, 1, 4, 4}, Expect{2, 2, 12, 16},
                   Expect{3, 0, 2, 1}, Expect{3, 1, 5, 6}, Expect{3, 2, 23, 36},
                   Expect{4, 1, 6, 8}}) {
    dhl::LatticeGraph g = dhl::build_lattice(e.b, e.level);
    REQUIRE(g.sites == e.sites);
    REQUIRE(static_cast<std::int64_t>(g.bonds.size()) == e.bonds);
    REQUIRE(dhl::lattice_site_count(e.b, e.level) == e.sites);
    REQUIRE(dhl::lattice_bond_count(e.b, e.level) == e.bonds);

    // Connected and two-colorable (no odd cycles): this is what licenses the
    // |K| * bonds energy normalizer in the exact enumeration.
    std::vector<int> color(static_cast<std::size_t>(g.sites), -1);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.sites));
    for (auto [u, v] : g.bonds) {
      adj[static_cast<std::size_t>(u)].push_back(v);
      adj[static_cast<std::size_t>(v)].push_back(u);
    }
    std::queue<int> q;
    q.push(0);
    color[0] = 0;
    int reached = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (color[static_cast<std::size_t>(v)] == -1) {
          color[static_cast<std::size_t>(v)] = color[static_cast<std::size_t>(u)] ^ 1;
          ++reached;
          q.push(v);
        } else {
          REQUIRE(color[static_cast<std::size_t>(v)] !=
                  color[static_cast<std::size_t>(u)]);
        }
      }
    }
    REQUIRE(reached == g.sites);
  }
}

TEST_CASE("construction guards", "[lattice][errors]") {
  REQUIRE_THROWS_AS(dhl::build_lattice(1, 0), dhl::DomainError);
  REQUIRE_THROWS_AS(dhl::build_lattice(9, 0), dhl::SizeGuardError);
  REQUIRE_THROWS_AS(dhl::build_lattice(2, -1), dhl::DomainError);
  REQUIRE_THROWS_AS(dhl::build_lattice(3, 5), dhl::SizeGuardError);
  // 44 sites at b=2, level 3: enumerable lattices stop at 24 sites.
  dhl::LatticeGraph big = dhl::build_lattice(2, 3);
  REQUIRE_THROWS_AS(dhl::exact_log_partition(big, 0.5), dhl::SizeGuardError);
}

TEST_CASE("single bond has the closed-form partition function", "[lattice][exact]") {
  dhl::LatticeGraph g = dhl::build_lattice(3, 0);
  for (double k : {-2.0, -1.0, -0.3, 0.0, 0.3, 1.0, 2.0}) {
    double expected = std::log(2.0 * std::exp(k) + 2.0 * std::exp(-k));
    REQUIRE(dhl::exact_log_partition(g, k) == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("four-cycle has the transfer-matrix partition function", "[lattice][exact]") {
  // Level 1 at b = 2 is a 4-cycle; Z = (2 cosh K)^4 + (2 sinh K)^4.
  dhl::LatticeGraph g = dhl::build_lattice(2, 1);
  for (double k : {-1.5, -0.6, 0.2, 0.8, 1.7}) {
    double expected = std::log(std::pow(2.0 * std::cosh(k), 4) + std::pow(2.0 * std::sinh(k), 4));
    REQUIRE(dhl::exact_log_partition(g, k) == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("zero coupling counts configurations", "[lattice][exact]") {
  for (int b : {2, 3}) {
    for (int level : {0, 1}) {
      dhl::LatticeGraph g = dhl::build_lattice(b, level);
      REQUIRE(dhl::exact_log_partition(g, 0.0) ==
              Catch::Approx(g.sites * std::log(2.0)).margin(1e-12));
    }
  }
}

TEST_CASE("enumeration matches a brute-force oracle", "[lattice][exact]") {
  for (double k : {-1.1, -0.4, 0.5, 1.3}) {
    dhl::LatticeGraph g5 = dhl::build_lattice(3, 1);  // 5 sites
    REQUIRE(dhl::exact_log_partition(g5, k) ==
            Catch::Approx(log_partition_brute(g5, k)).margin(1e-12));
    dhl::LatticeGraph g12 = dhl::build_lattice(2, 2);  // 12 sites
    REQUIRE(dhl::exact_log_partition(g12, k) ==
            Catch::Approx(log_partition_brute(g12, k)).margin(1e-12));
  }
}

TEST_CASE("pinned enumeration restores the flip symmetry as exactly ln 2",
          "[lattice][exact]") {
  // Pin spin 0 by hand and sum directly; the library value must exceed the
  // pinned sum by exactly the log of the flip degeneracy.
  dhl::LatticeGraph g = dhl::build_lattice(2, 1);
  const double k = 0.9;
  const double shift = std::abs(k) * static_cast<double>(g.bonds.size());
  long double acc = 0.0L;
  for (std::uint32_t mask = 0; mask < (1u << (g.sites - 1)); ++mask) {
    std::uint32_t full = mask << 1 | 1u;  // spin 0 fixed to +1
    int energy = 0;
    for (auto [u, v] : g.bonds) {
      int su = (full >> u) & 1 ? 1 : -1;
      int sv = (full >> v) & 1 ? 1 : -1;
      energy += su * sv;
    }
    acc += std::exp(static_cast<long double>(k * energy - shift));
  }
  double pinned = static_cast<double>(std::log(acc)) + shift;
  REQUIRE(dhl::exact_log_partition(g, k) ==
          Catch::Approx(pinned + std::log(2.0)).margin(1e-13));
}

TEST_CASE("bond decimation closed form", "[lattice][decimation]") {
  for (int b : {2, 3, 4}) {
    // Direct formulas, valid while cosh does not overflow.
    for (double k : {-2.0, -0.7, -0.1, 0.1, 0.6, 1.9}) {
      dhl::DecimationStep s = dhl::decimation_step(b, k);
      REQUIRE(s.coupling_in == k);
      REQUIRE(s.coupling_out ==
              Catch::Approx(0.5 * b * std::log(std::cosh(2.0 * k))).margin(1e-13));
      REQUIRE(s.log_bond_factor ==
              Catch::Approx(0.5 * b * std::log(4.0 * std::cosh(2.0 * k))).margin(1e-13));
    }

    // Zero coupling decimates to zero coupling; the factor counts the freed
    // spins: 2^b states per replaced bond pair.
    dhl::DecimationStep zero = dhl::decimation_step(b, 0.0);
    REQUIRE(zero.coupling_out == 0.0);
    REQUIRE(zero.log_bond_factor == Catch::Approx(b * std::log(2.0)).margin(1e-14));

    // Even in the coupling, exactly.
    REQUIRE(dhl::decimation_step(b, 1.3).coupling_out ==
            dhl::decimation_step(b, -1.3).coupling_out);

    // Overflow-free at couplings where cosh(2K) is inf.
    dhl::DecimationStep huge = dhl::decimation_step(b, 400.0);
    REQUIRE(std::isfinite(huge.coupling_out));
    REQUIRE(huge.coupling_out ==
            Catch::Approx(0.5 * b * (2.0 * 400.0 - std::log(2.0))).margin(1e-9));
  }
  REQUIRE_THROWS_AS(dhl::decimation_step(1, 0.5), dhl::DomainError);
  REQUIRE_THROWS_AS(dhl::decimation_step(2, std::nan("")), dhl::DomainError);
}

TEST_CASE("renormalization identity on enumerable lattices", "[lattice][decimation]") {
  // ln Z(level n+1, K) = (2b)^n log_c(K) + ln Z(level n, K'): exact identity,
  // residual limited by rounding only.
  for (double k : {-1.6, -0.8, -0.2, 0.2, 0.5, 0.8, 1.4, 2.0}) {
    dhl::DecimationCheck c20 = dhl::verify_decimation(2, 0, k);
    REQUIRE(c20.residual < 1e-10);
    REQUIRE(c20.residual == std::abs(c20.lhs - c20.rhs));

    dhl::DecimationCheck c30 = dhl::verify_decimation(3, 0, k);
    REQUIRE(c30.residual < 1e-10);

    dhl::DecimationCheck c21 = dhl::verify_decimation(2, 1, k);
    REQUIRE(c21.residual < 1e-9);

    dhl::DecimationCheck c31 = dhl::verify_decimation(3, 1, k);
    REQUIRE(c31.residual < 1e-9);
  }

  // The worked spot check: K = 0.5 at b = 3.
  dhl::DecimationCheck spot = dhl::verify_decimation(3, 0, 0.5);
  REQUIRE(spot.step.coupling_out ==
          Catch::Approx(1.5 * std::log(std::cosh(1.0))).margin(1e-14));
  REQUIRE(spot.residual < 1e-10);
}
