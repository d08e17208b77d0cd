#pragma once

#include <complex>

#include "spintunnel/matching.hpp"
#include "spintunnel/spectral.hpp"

namespace spintunnel {

/// Split symmetric/antisymmetric level pair driving one tunneling cycle.
struct SplitPair {
  double lambda_plus = 0;   // eigenvalue in the +g sector
  double lambda_minus = 0;  // eigenvalue in the -g sector
  double tau = 0;           // pi / |lambda_plus - lambda_minus|
  CorrespondencePair source;
};

/// tau = pi / |gap|; throws when the gap is below 1e-15 (unresolvable).
double tunneling_period(double lambda_plus, double lambda_minus);

SplitPair make_split_pair(const EigenSystem& plus, const EigenSystem& minus,
                          const CorrespondencePair& pair);

/// Spectral propagator psi(t) = sum_n e^{-i t (lambda_n - shift)} <v_n|psi0> v_n.
/// The shift changes only the global phase; it keeps phases small for long
/// times near a reference level.
Eigen::VectorXcd evolve(const EigenSystem& es, const Eigen::VectorXcd& psi0,
                        double t, double energy_shift = 0.0);

/// Sites with Z^d coordinate within |x|_1/2 of x, on both spins.
struct SpinProjector {
  Coord center;
  std::vector<std::size_t> basis_indices;  // indices into the spinful basis

  static SpinProjector around(const Coord& x, const LatticeBox& box);
  double norm_of_projection(const Eigen::VectorXcd& psi) const;
};

struct TraceSample {
  double t = 0;
  double fidelity_up = 0;    // |<phi,+1 | psi(t)>|
  double fidelity_down = 0;  // |<phi,-1 | psi(t)>|
  double containment = 0;    // || P_hat psi(t) ||
};

struct TunnelingTrace {
  std::vector<TraceSample> samples;
  double tau = 0;
  double epsilon = 0;       // 1 - overlap of the source pair
  double max_defect = 0;    // max || psi(t) - e^{-it lambda+} |phi,(-1)^n> ||
                            // over window times |t - n tau| < delta tau
  double defect_bound = 0;  // 4 (delta + epsilon) with the realized delta
  double min_containment = 0;
};

struct GridSpec {
  int points_per_period = 2048;  // uniform samples per period over [0, 2 tau]
  int window_points = 64;        // samples per window around n tau
  double window_fraction = 0.01; // window half-width as a fraction of tau
  int n_max = 4;                 // highest multiple of tau windowed
};

/// Prepares |phi+, +1> from the pair's symmetric-sector eigenvector and
/// records fidelities and containment along the evolution under h_g.
TunnelingTrace spin_flip_experiment(const EigenSystem& spin_es,
                                    const EigenSystem& plus,
                                    const EigenSystem& minus,
                                    const CorrespondencePair& pair,
                                    const GridSpec& grid,
                                    double min_overlap = 0.999);

struct CorrelatorResult {
  double sup_amp = 0;    // max over the grid of |<x,i| e^{-it h} |y,j>|
  double sup_rate = 0;   // max over the grid (t != 0) of |amp| / |t|
  double certified_upper_bound = 0;  // sum_n |<x,i|v_n><v_n|y,j>|
};

struct TimeGrid {
  double t_min = 1e-1;
  double t_max = 1e9;
  int n_points = 256;  // log-spaced; a grid sup is a lower bound on sup_t
};

/// Cross-spin transition amplitude statistics between |y,-1> and |x,+1>.
CorrelatorResult spin_correlator(const EigenSystem& spin_es, const Coord& x,
                                 const Coord& y, const TimeGrid& grid);

}  // namespace spintunnel
