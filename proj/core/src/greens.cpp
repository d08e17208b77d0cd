#include "spintunnel/greens.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "spintunnel/disorder.hpp"

namespace spintunnel {

ResolventSolver::ResolventSolver(const OperatorMatrix& h,
                                 std::complex<double> z)
    : h_(&h), z_(z) {
  if (!(z.imag() > 0))
    throw std::invalid_argument("resolvent requires eta_im > 0");
  Eigen::MatrixXcd A = h.entries.cast<std::complex<double>>();
  A.diagonal().array() -= z;
  lu_.compute(A);
}

std::complex<double> ResolventSolver::entry(std::size_t row_idx,
                                            std::size_t col_idx) {
  auto it = columns_.find(col_idx);
  if (it == columns_.end()) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(h_->dim());
    e(col_idx) = 1.0;
    it = columns_.emplace(col_idx, lu_.solve(e)).first;
  }
  return it->second(row_idx);
}

std::complex<double> ResolventSolver::entry(const SpinSite& row,
                                            const SpinSite& col) {
  return entry(h_->basis_index(row.x, row.spin),
               h_->basis_index(col.x, col.spin));
}

std::complex<double> greens_entry(const OperatorMatrix& h,
                                  const ResolventQuery& query) {
  ResolventSolver solver(h, query.z());
  return solver.entry(query.source, query.target);
}

std::complex<double> greens_entry_spectral(const EigenSystem& es,
                                           const ResolventQuery& query) {
  if (!(query.eta_im > 0))
    throw std::invalid_argument("resolvent requires eta_im > 0");
  const std::size_t a = es.spinful
      ? (query.source.spin == +1 ? es.box.index_of(query.source.x)
                                 : es.box.n_sites() + es.box.index_of(query.source.x))
      : es.box.index_of(query.source.x);
  const std::size_t b = es.spinful
      ? (query.target.spin == +1 ? es.box.index_of(query.target.x)
                                 : es.box.n_sites() + es.box.index_of(query.target.x))
      : es.box.index_of(query.target.x);
  std::complex<double> sum = 0;
  for (int n = 0; n < es.dim(); ++n)
    sum += es.eigenvectors(a, n) * es.eigenvectors(b, n) /
           (es.eigenvalues(n) - query.z());
  return sum;
}

double resolvent_identity_check(const OperatorMatrix& h_g,
                                const OperatorMatrix& h_0,
                                const SparseVec& zeta, double g,
                                std::complex<double> z) {
  if (!(z.imag() > 0))
    throw std::invalid_argument("resolvent requires eta_im > 0");
  if (!h_g.spinful || !h_0.spinful)
    throw std::invalid_argument("identity check expects spinful operators");
  const std::size_t n = h_g.box.n_sites();
  Eigen::MatrixXcd Ag = h_g.entries.cast<std::complex<double>>();
  Ag.diagonal().array() -= z;
  Eigen::MatrixXcd A0 = h_0.entries.cast<std::complex<double>>();
  A0.diagonal().array() -= z;
  const Eigen::MatrixXcd Rg = Ag.partialPivLu().inverse();
  const Eigen::MatrixXcd R0 = A0.partialPivLu().inverse();

  Eigen::VectorXd zvec = Eigen::VectorXd::Zero(n);
  for (const auto& [x, a] : zeta.terms) zvec(h_g.box.index_of(x)) = a;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  D.block(0, n, n, n) = zvec * zvec.transpose();
  D.block(n, 0, n, n) = zvec * zvec.transpose();

  const Eigen::MatrixXcd defect =
      Rg - R0 + g * R0 * D.cast<std::complex<double>>() * Rg;
  return defect.cwiseAbs().maxCoeff();
}

RateFit fit_decay_rate(const std::vector<MomentBin>& bins) {
  RateFit fit;
  double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (const MomentBin& b : bins) {
    if (!(b.mean > 0) || !(b.stderr_mean > 0)) continue;
    const double y = std::log(b.mean);
    const double sigma = b.stderr_mean / b.mean;  // delta method
    const double w = 1.0 / (sigma * sigma);
    const double x = static_cast<double>(b.d_gamma);
    S += w;
    Sx += w * x;
    Sy += w * y;
    Sxx += w * x * x;
    Sxy += w * x * y;
    ++fit.n_bins;
  }
  const double det = S * Sxx - Sx * Sx;
  if (fit.n_bins < 2 || !(det > 0)) return fit;
  const double slope = (S * Sxy - Sx * Sy) / det;
  fit.log_A = (Sy - slope * Sx) / S;
  fit.mu = -slope;
  fit.mu_stderr = std::sqrt(S / det);
  const double z95 = 1.959963984540054;
  fit.mu_ci_low = fit.mu - z95 * fit.mu_stderr;
  fit.mu_ci_high = fit.mu + z95 * fit.mu_stderr;
  fit.ok = true;
  return fit;
}

MomentEstimate fractional_moment_scan(
    const LatticeBox& box, const ModelParams& params,
    const DisorderSpec& base_disorder, double s, std::complex<double> z,
    const std::vector<std::pair<SpinSite, SpinSite>>& pairs, int n_seeds,
    std::uint64_t base_seed, int n_threads) {
  if (!(s > 0) || !(s < 1))
    throw std::invalid_argument("fractional exponent s must lie in (0,1)");
  if (!(z.imag() > 0))
    throw std::invalid_argument("resolvent requires eta_im > 0");
  if (pairs.empty()) throw std::invalid_argument("empty pair list");

  // per-(pair, seed) samples; filled independently so the result does not
  // depend on the number of workers
  Eigen::MatrixXd samples(pairs.size(), n_seeds);
  auto work = [&](int first, int last) {
    for (int i = first; i < last; ++i) {
      DisorderSpec d = base_disorder;
      d.seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
      const auto V = sample_potential(box, d);
      const OperatorMatrix h = build_spin_H(box, params, V);
      ResolventSolver solver(h, z);
      for (std::size_t p = 0; p < pairs.size(); ++p)
        samples(p, i) =
            std::pow(std::abs(solver.entry(pairs[p].first, pairs[p].second)),
                     s);
    }
  };
  if (n_threads <= 1) {
    work(0, n_seeds);
  } else {
    std::vector<std::thread> workers;
    const int chunk = (n_seeds + n_threads - 1) / n_threads;
    for (int w = 0; w < n_threads; ++w) {
      const int first = w * chunk;
      const int last = std::min(n_seeds, first + chunk);
      if (first < last) workers.emplace_back(work, first, last);
    }
    for (auto& t : workers) t.join();
  }

  // pool samples per (d_Gamma, spin-sector) bin
  struct Acc {
    double sum = 0, sumsq = 0;
    long n = 0;
  };
  std::map<std::pair<int, bool>, Acc> acc;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const int d = graph_metric(pairs[p].first, pairs[p].second);
    const bool cross = pairs[p].first.spin != pairs[p].second.spin;
    Acc& a = acc[{d, cross}];
    for (int i = 0; i < n_seeds; ++i) {
      a.sum += samples(p, i);
      a.sumsq += samples(p, i) * samples(p, i);
      ++a.n;
    }
  }

  MomentEstimate est;
  est.s = s;
  est.z = z;
  est.g = params.g;
  est.n_seeds = n_seeds;
  est.apriori_envelope = kAprioriConstant / (1.0 - s);
  for (const auto& [key, a] : acc) {
    MomentBin bin;
    bin.d_gamma = key.first;
    bin.cross_spin = key.second;
    bin.n = static_cast<int>(a.n);
    bin.mean = a.sum / a.n;
    const double var =
        a.n > 1 ? std::max(0.0, (a.sumsq - a.sum * a.sum / a.n) / (a.n - 1))
                : 0.0;
    bin.stderr_mean = std::sqrt(var / a.n);
    if (bin.mean > est.apriori_envelope) est.apriori_violated = true;
    est.bins.push_back(bin);
  }
  std::vector<MomentBin> same, cross;
  for (const MomentBin& b : est.bins)
    (b.cross_spin ? cross : same).push_back(b);
  est.fit_all = fit_decay_rate(est.bins);
  est.fit_same_spin = fit_decay_rate(same);
  est.fit_cross_spin = fit_decay_rate(cross);
  return est;
}

}  // namespace spintunnel
