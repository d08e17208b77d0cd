#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>
#include <complex>
#include <map>
#include <vector>

#include "spintunnel/model.hpp"
#include "spintunnel/spectral.hpp"

namespace spintunnel {

struct ResolventQuery {
  double energy = 0;
  double eta_im = 1e-2;  // z = energy + i eta_im, eta_im > 0
  SpinSite source;
  SpinSite target;

  std::complex<double> z() const { return {energy, eta_im}; }
};

/// Factored resolvent of one operator instance; answers many matrix-element
/// queries via one LU decomposition per z.
class ResolventSolver {
 public:
  ResolventSolver(const OperatorMatrix& h, std::complex<double> z);

  /// <row | (h - z)^{-1} | col> by direct linear solve.
  std::complex<double> entry(std::size_t row_idx, std::size_t col_idx);

  std::complex<double> entry(const SpinSite& row, const SpinSite& col);

 private:
  const OperatorMatrix* h_;
  std::complex<double> z_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  std::map<std::size_t, Eigen::VectorXcd> columns_;  // solved columns, cached
};

/// Single resolvent matrix element; throws unless eta_im > 0.
std::complex<double> greens_entry(const OperatorMatrix& h,
                                  const ResolventQuery& query);

/// Independent route: sum_n <a|v_n><v_n|b> / (lambda_n - z).
std::complex<double> greens_entry_spectral(const EigenSystem& es,
                                           const ResolventQuery& query);

/// Max-norm defect of (h_g - z)^{-1} - (h_0 - z)^{-1}
///   + g (h_0 - z)^{-1} D (h_g - z)^{-1}, with D the cross-spin rank-one term.
double resolvent_identity_check(const OperatorMatrix& h_g,
                                const OperatorMatrix& h_0,
                                const SparseVec& zeta, double g,
                                std::complex<double> z);

struct MomentBin {
  int d_gamma = 0;
  bool cross_spin = false;
  double mean = 0;
  double stderr_mean = 0;
  int n = 0;
};

struct RateFit {
  double log_A = 0;
  double mu = 0;       // decay rate (positive = decay)
  double mu_stderr = 0;
  double mu_ci_low = 0;   // 95%
  double mu_ci_high = 0;
  int n_bins = 0;
  bool ok = false;
};

struct MomentEstimate {
  double s = 0;
  std::complex<double> z;
  double g = 0;
  int n_seeds = 0;
  std::vector<MomentBin> bins;
  RateFit fit_all;
  RateFit fit_same_spin;
  RateFit fit_cross_spin;
  double apriori_envelope = 0;   // C / (1 - s)
  bool apriori_violated = false; // some bin mean exceeds the envelope
};

/// Default constant of the a priori moment envelope C / (1 - s).
inline constexpr double kAprioriConstant = 4.0;

/// Ensemble averages of |G_z|^s binned by d_Gamma over the listed spin-site
/// pairs, with weighted log-linear decay fits.  Seeds are
/// derive_seed(base_seed, i).
MomentEstimate fractional_moment_scan(
    const LatticeBox& box, const ModelParams& params,
    const DisorderSpec& base_disorder, double s, std::complex<double> z,
    const std::vector<std::pair<SpinSite, SpinSite>>& pairs, int n_seeds,
    std::uint64_t base_seed, int n_threads = 1);

/// Weighted least squares of log(mean) against -mu * distance + log_A.
RateFit fit_decay_rate(const std::vector<MomentBin>& bins);

}  // namespace spintunnel
