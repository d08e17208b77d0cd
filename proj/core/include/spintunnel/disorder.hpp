#pragma once

#include <cstdint>
#include <vector>

#include "spintunnel/lattice.hpp"

namespace spintunnel {

/// Distribution of the i.i.d. on-site potential.  Either uniform on
/// [-half_width, half_width] or a user-supplied piecewise-constant density
/// given by bin edges and per-bin density values.
struct DisorderSpec {
  enum class Law { Uniform, Table };

  Law law = Law::Uniform;
  double half_width = 0.5;
  std::vector<double> bin_edges;    // Table: size m+1, increasing
  std::vector<double> bin_density;  // Table: size m, nonnegative
  std::uint64_t seed = 0;

  /// sup-norm of the density rho.
  double density_sup() const;
  /// Throws std::invalid_argument on malformed specs (density must be
  /// nonnegative, integrate to 1 within 1e-9, and have positive sup).
  void validate() const;

  static DisorderSpec uniform(double half_width, std::uint64_t seed);
  static DisorderSpec table(std::vector<double> edges,
                            std::vector<double> density, std::uint64_t seed);
};

/// 64-bit seed mix/finalizer used for all seed derivation.
std::uint64_t hash_mix(std::uint64_t v);
/// Derived stream seed for ensemble member i.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t i);

/// Potential value at a single site: a deterministic function of
/// (seed, coordinate) so boxes sharing sites share values.
double potential_at(const Coord& x, const DisorderSpec& spec);

/// One i.i.d. draw per box site, in enumeration order.
std::vector<double> sample_potential(const LatticeBox& box,
                                     const DisorderSpec& spec);

}  // namespace spintunnel
