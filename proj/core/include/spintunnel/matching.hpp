#pragma once

#include <vector>

#include "spintunnel/spectral.hpp"

namespace spintunnel {

/// Minimum pairwise gap of a finite set of values; throws below 2 values.
double min_spacing(const std::vector<double>& values);
double min_spacing(const Eigen::VectorXd& values);

struct BinomialEstimate {
  double p_hat = 0;
  int hits = 0;
  int n = 0;
  double ci_low = 0;   // 95% Wilson interval
  double ci_high = 0;
};

/// 95% Wilson interval around hits/n.
BinomialEstimate binomial_estimate(int hits, int n);

/// Empirical P( Delta_min[sigma(H_Lambda)] < eps ) over independent disorder
/// realizations with seeds derive_seed(base_seed, i).
BinomialEstimate minami_statistic(const LatticeBox& box, double gamma,
                                  const DisorderSpec& base_disorder,
                                  double eps, int n_seeds,
                                  std::uint64_t base_seed);

/// Geometric scale sequence u_k = 3^k u0, L_k = 3^{k-1} |u0|_1, with
/// fattened companions Lambda_{(1 +- beta) L_k}(u_k).
struct ScaleSequence {
  Coord u0;
  double beta = 0.3;
  std::vector<LatticeBox> boxes;        // Lambda_k, k = 1..k_max
  std::vector<LatticeBox> boxes_plus;   // Lambda_k^+
  std::vector<LatticeBox> boxes_minus;  // Lambda_k^-
};

/// Throws if u0 = 0, the fattened boxes overlap, or some Lambda_k meets
/// supp zeta.
ScaleSequence scale_sequence(const Coord& u0, int k_max, double beta,
                             const SparseVec& zeta);

struct PsiAssignment {
  int inner_index = 0;      // index into the host eigen-system
  double lambda = 0;        // inner eigenvalue
  int outer_index = 0;      // assigned index into sigma(H_{Lambda+})
  double eta = 0;           // assigned outer eigenvalue
  double gap = 0;           // |lambda - eta|
  double residual_norm = 0; // ||(H_{Lambda+} - lambda)(phi)_{Lambda+}||_2
};

struct SpectralMap {
  std::vector<PsiAssignment> assignments;
  bool injective = false;
};

/// Eigenvalue-matching map from the local spectrum of the host system on
/// Lambda into sigma(H_{Lambda+}), via normalized restrictions and nearest
/// outer eigenvalue.  Throws if some restriction has norm <= 1/2 (the
/// matching hypothesis failed on this realization).
SpectralMap build_psi_map(const EigenSystem& host, const LocalIndexSet& local,
                          const EigenSystem& outer);

struct CorrespondencePair {
  int index_plus = 0;
  int index_minus = 0;
  double overlap = 0;  // phase-aligned, in [0,1]
  double eigenvalue_gap = 0;
  Coord center_plus;
  Coord center_minus;
};

/// Pairs (i,j) of eigenvectors of H_{+g} and H_{-g} with both centers in
/// box, overlap > 1 - eps and eigenvalue gap < eps; greedy by descending
/// overlap, each index used at most once.
std::vector<CorrespondencePair> find_corresponding_pairs(
    const EigenSystem& plus, const LocalizationProfile& plus_profile,
    const EigenSystem& minus, const LocalizationProfile& minus_profile,
    const LatticeBox& box, double eps);

enum class AuditStatus { Pass, Fail, Vacuous, HypothesisFailed };

struct PairCountAudit {
  AuditStatus status = AuditStatus::Fail;
  int count = 0;
  double lower_bound = 0;  // 2 alpha |Lambda-| - |Lambda+|
  double outer_min_spacing = 0;
  double spacing_threshold = 0;  // L^{-2d-1}
};

/// Compares the detected pair count with the matching lower bound, gated on
/// the outer spacing hypothesis Delta_min[sigma(H_{Lambda+})] > L^{-2d-1}.
PairCountAudit pair_count_audit(int pair_count, const LatticeBox& box,
                                const LatticeBox& box_plus,
                                const LatticeBox& box_minus,
                                double outer_min_spacing, double alpha);

}  // namespace spintunnel
