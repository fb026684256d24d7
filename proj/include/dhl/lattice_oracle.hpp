#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "dhl/errors.hpp"

namespace dhl {

// ---- hierarchical lattice construction ------------------------------------------
//
// Level 0 is a single bond between two anchor sites.  Each level replaces
// every bond u-v by b parallel two-bond paths u-w-v through fresh sites, so
// level n has (2b)^n bonds and 2 + b ((2b)^n - 1)/(2b - 1) sites.

struct LatticeGraph {
  int b = 0;
  int level = 0;
  int sites = 0;
  std::vector<std::pair<int, int>> bonds;
};

inline std::int64_t lattice_bond_count(int b, int level) {
  std::int64_t m = 1;
  for (int i = 0; i < level; ++i) m *= 2 * b;
  return m;
}

inline std::int64_t lattice_site_count(int b, int level) {
  return 2 + b * (lattice_bond_count(b, level) - 1) / (2 * b - 1);
}

inline LatticeGraph build_lattice(int b, int level) {
  if (b < 2) throw DomainError("build_lattice: b must be >= 2");
  if (b > 8) throw SizeGuardError("build_lattice: b exceeds 8");
  if (level < 0) throw DomainError("build_lattice: level must be >= 0");
  if (level > 4) throw SizeGuardError("build_lattice: level exceeds 4");
  if (lattice_site_count(b, level) > 1 << 22)
    throw SizeGuardError("build_lattice: site count exceeds the 2^22 guard");
  LatticeGraph g;
  g.b = b;
  g.level = level;
  g.sites = 2;
  g.bonds = {{0, 1}};
  for (int n = 0; n < level; ++n) {
    std::vector<std::pair<int, int>> next;
    next.reserve(g.bonds.size() * static_cast<std::size_t>(2 * b));
    for (auto [u, v] : g.bonds) {
      for (int j = 0; j < b; ++j) {
        int w = g.sites++;
        next.emplace_back(u, w);
        next.emplace_back(w, v);
      }
    }
    g.bonds.swap(next);
  }
  return g;
}

// ---- exact partition function -----------------------------------------------------

namespace detail {

// Compensated (Neumaier) accumulation: exact enumeration sums up to ~2^24
// terms and plain addition would lose the 1e-9 residual target.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double result() const { return sum + comp; }
};

}  // namespace detail

// ln Z for the Ising model with uniform coupling K: Z = sum_s exp(K sum_bonds
// s_u s_v).  Enumerates spin configurations with one spin pinned (global flip
// symmetry contributes ln 2), walking a Gray code so each step flips exactly
// one spin.  Terms are normalized by the ground-state energy so every
// summand is <= 1.
inline double exact_log_partition(const LatticeGraph& g, double coupling) {
  if (g.sites > 24)
    throw SizeGuardError("exact_log_partition: enumeration limited to 24 sites");
  const int n_free = g.sites - 1;  // spin 0 pinned to +1
  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(g.sites));
  for (std::size_t e = 0; e < g.bonds.size(); ++e) {
    adjacency[static_cast<std::size_t>(g.bonds[e].first)].push_back(g.bonds[e].second);
    adjacency[static_cast<std::size_t>(g.bonds[e].second)].push_back(g.bonds[e].first);
  }

  std::vector<int> spin(static_cast<std::size_t>(g.sites), 1);
  std::int64_t energy = static_cast<std::int64_t>(g.bonds.size());  // all aligned
  const std::int64_t bond_count = static_cast<std::int64_t>(g.bonds.size());
  // Normalizer: K*E <= |K|*B for every configuration (the lattice is
  // bipartite, so E ranges over [-B, B]); keeps all summands <= 1 for either
  // coupling sign.
  const double shift = std::abs(coupling) * static_cast<double>(bond_count);

  detail::CompensatedSum acc;
  acc.add(std::exp(coupling * static_cast<double>(energy) - shift));
  const std::uint64_t total = std::uint64_t{1} << n_free;
  for (std::uint64_t i = 1; i < total; ++i) {
    // Gray code: configuration i ^ (i >> 1); step i-1 -> i flips bit ctz(i).
    int site = 1 + static_cast<int>(__builtin_ctzll(i));
    std::int64_t delta = 0;
    for (int nb : adjacency[static_cast<std::size_t>(site)])
      delta += spin[static_cast<std::size_t>(site)] * spin[static_cast<std::size_t>(nb)];
    spin[static_cast<std::size_t>(site)] = -spin[static_cast<std::size_t>(site)];
    energy -= 2 * delta;
    acc.add(std::exp(coupling * static_cast<double>(energy) - shift));
  }
  return std::log(2.0) + shift + std::log(acc.result());
}

// ---- single decimation step --------------------------------------------------------
//
// Summing out the b midpoint spins of the parallel paths joining u and v
// replaces them by one bond of coupling K' = (b/2) ln cosh 2K and multiplies
// Z by c = exp(log_c) per replaced bond, log_c = (b/2)(ln(2 cosh 2K) + ln 2).
// Evaluated via 2K + log1p(e^{-4K}) so large couplings do not overflow.

struct DecimationStep {
  double coupling_in = 0.0;
  double coupling_out = 0.0;
  double log_bond_factor = 0.0;
};

inline DecimationStep decimation_step(int b, double coupling) {
  if (b < 2) throw DomainError("decimation_step: b must be >= 2");
  if (!std::isfinite(coupling)) throw DomainError("decimation_step: coupling must be finite");
  const double abs2k = 2.0 * std::abs(coupling);  // cosh is even in the coupling
  const double log2cosh2k = abs2k + std::log1p(std::exp(-2.0 * abs2k));
  DecimationStep s;
  s.coupling_in = coupling;
  s.coupling_out = 0.5 * b * (log2cosh2k - std::log(2.0));
  s.log_bond_factor = 0.5 * b * (log2cosh2k + std::log(2.0));
  return s;
}

// Residual of the exact renormalization identity
//   ln Z(level n+1, K) = (2b)^n log_c(K) + ln Z(level n, K_eff(K));
// both sides evaluated by exact enumeration.
struct DecimationCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  DecimationStep step;
};

inline DecimationCheck verify_decimation(int b, int level, double coupling) {
  DecimationCheck out;
  out.step = decimation_step(b, coupling);
  LatticeGraph fine = build_lattice(b, level + 1);
  LatticeGraph coarse = build_lattice(b, level);
  out.lhs = exact_log_partition(fine, coupling);
  out.rhs = static_cast<double>(lattice_bond_count(b, level)) * out.step.log_bond_factor +
            exact_log_partition(coarse, out.step.coupling_out);
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace dhl
