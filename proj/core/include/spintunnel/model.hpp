#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "spintunnel/disorder.hpp"
#include "spintunnel/lattice.hpp"

namespace spintunnel {

/// Sparse real site -> amplitude map with bounded support.
struct SparseVec {
  std::vector<std::pair<Coord, double>> terms;

  double norm2() const;
  /// Unit delta at the given site (default: the origin).
  static SparseVec delta(const Coord& x);
};

/// Hopping, spin coupling, and the rank-one profile zeta (||zeta||_2 = 1).
struct ModelParams {
  double gamma = 0.1;
  double g = 0.5;
  SparseVec zeta;

  void validate() const;  // |  ||zeta||_2 - 1 | <= 1e-12, finite support
};

/// Largest dense matrix dimension accepted by the assembly routines.
inline constexpr int kMaxDenseDim = 4096;

enum class OperatorKind { H, Hg, SpinH, Restriction };

/// A finite symmetric operator together with the box and basis order it
/// lives on.  Spinless operators use the box enumeration; spinful ones use
/// spin-site order (all spin-up sites first, then all spin-down).
struct OperatorMatrix {
  OperatorKind kind = OperatorKind::H;
  Eigen::MatrixXd entries;
  LatticeBox box;
  bool spinful = false;

  int dim() const { return static_cast<int>(entries.rows()); }
  /// Basis index of a spin-site (spinful) or site (spinless).
  std::size_t basis_index(const Coord& x, int spin = +1) const;
  SpinSite basis_site(std::size_t idx) const;
};

/// Anderson hamiltonian on the box: gamma * centered Laplacian + diag(V),
/// hopping across the box boundary dropped (Dirichlet restriction).
OperatorMatrix build_H(const LatticeBox& box, double gamma,
                       const std::vector<double>& V);

/// Rank-one projector D = |zeta><zeta| on the box basis.
OperatorMatrix build_rank_one(const LatticeBox& box, const SparseVec& zeta);

/// H_g = H + g |zeta><zeta| on the box.
OperatorMatrix build_H_g(const LatticeBox& box, const ModelParams& params,
                         double g, const std::vector<double>& V);

/// Spin hamiltonian on the doubled basis: H on each spin sector plus the
/// cross-spin coupling g zeta(x) zeta(y).
OperatorMatrix build_spin_H(const LatticeBox& box, const ModelParams& params,
                            const std::vector<double>& V);

/// Dirichlet restriction P_Lambda A P_Lambda of a spinless operator to a
/// sub-box, reindexed to the sub-box enumeration.
OperatorMatrix restrict_to_box(const OperatorMatrix& A, const LatticeBox& sub);

/// Max deviation || h_g U_pm - U_pm H_{pm g} ||_max over both sign sectors,
/// with U_pm the isometries |x> -> (|x,+1> pm |x,-1>)/sqrt(2).  Structural
/// self-test of the spin decomposition.
double spin_decomposition_check(const LatticeBox& box,
                                const ModelParams& params,
                                const std::vector<double>& V);

}  // namespace spintunnel
