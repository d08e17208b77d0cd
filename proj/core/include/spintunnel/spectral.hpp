#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "spintunnel/model.hpp"

namespace spintunnel {

/// Full eigen-decomposition of a finite symmetric operator.
struct EigenSystem {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, aligned
  double residual_max = 0;       // max_i ||A v_i - lambda_i v_i||_2
  OperatorKind source_kind = OperatorKind::H;
  LatticeBox box;
  bool spinful = false;

  int dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Dense exact diagonalization.  Throws if the residual check against
/// tol * ||A||_max * dim fails.
EigenSystem diagonalize(const OperatorMatrix& A, double tol = 1e-10);

/// Localization center: lexicographically smallest maximizer of
/// x -> |(1+|x|_1)^{d+1} phi(x)|.  For spinful vectors the amplitude at x is
/// max over the two spins.
Coord localization_center(const Eigen::VectorXd& phi, const LatticeBox& box,
                          bool spinful = false);

struct SuleFit {
  double A = 0;         // fitted prefactor
  double xi = 0;        // fitted inverse localization length (envelope slope)
  double fit_residual = 0;
  bool cap_reached = false;
};

inline constexpr double kSuleAmplitudeFloor = 1e-14;
inline constexpr double kSuleSlopeCap = 50.0;

/// Per-eigenvector localization data for one eigen-system.
struct LocalizationProfile {
  std::vector<Coord> centers;
  SuleFit sule;
};

/// Centers for every eigenvector plus the SULE envelope fit.
LocalizationProfile localization_profile(const EigenSystem& es);

/// Envelope least-squares fit of log|phi_i(x)| - (d+1) log(1+|x_i|_1)
/// against -xi |x - x_i|_1 + log A.  Throws if fewer than two distinct
/// distances survive the amplitude floor; reports cap_reached when the
/// slope hits the configured cap (delta-function limit).
SuleFit sule_fit(const EigenSystem& es, const std::vector<Coord>& centers);

/// Indices of eigenvectors whose localization center lies in Lambda.
struct LocalIndexSet {
  LatticeBox box;
  std::vector<int> indices;
  std::vector<double> local_spectrum;
};

LocalIndexSet local_index_set(const EigenSystem& es,
                              const LocalizationProfile& profile,
                              const LatticeBox& box);

struct LocalProjectionReport {
  double norm_out = 0;   // || (1 - P_{Lambda+}) P^{(g)}_Lambda ||
  double norm_in = 0;    // || (1 - P^{(g)}_Lambda) P_{Lambda-} ||
  double trace_cross = 0;  // tr( P_{Lambda+} P^{(g)}_Lambda )
  int count_box = 0;     // |I_Lambda|
  int count_plus = 0;    // |Lambda+|
  int count_minus = 0;   // |Lambda-|
};

/// Concentration of the local eigenbasis projection between the box and its
/// fattenings Lambda_{L +- ell}(u).  Both fattenings must stay inside the
/// host box (the inner one is clamped at radius 0).
LocalProjectionReport local_projections(const EigenSystem& es,
                                        const LocalizationProfile& profile,
                                        const LatticeBox& box, int ell);

/// Participation ratio 1 / sum |phi(x)|^4 of a normalized vector.
double participation_ratio(const Eigen::VectorXd& phi);

}  // namespace spintunnel
