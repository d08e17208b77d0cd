#include "spintunnel/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spintunnel {

namespace {

// e^{-i lambda t} with the product reduced mod 2 pi in extended precision;
// keeps long-time phases accurate for t up to ~1e9.
std::complex<double> phase_factor(double lambda, double t) {
  constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  long double arg = -static_cast<long double>(lambda) * t;
  arg = std::fmod(arg, two_pi);
  return {static_cast<double>(std::cos(arg)),
          static_cast<double>(std::sin(arg))};
}

Eigen::VectorXcd phases(const Eigen::VectorXd& lambdas, double t,
                        double shift) {
  Eigen::VectorXcd p(lambdas.size());
  for (Eigen::Index n = 0; n < lambdas.size(); ++n)
    p(n) = phase_factor(lambdas(n) - shift, t);
  return p;
}

}  // namespace

double tunneling_period(double lambda_plus, double lambda_minus) {
  const double gap = std::abs(lambda_plus - lambda_minus);
  if (gap < 1e-15)
    throw std::invalid_argument("degenerate pair: tunneling period unresolvable");
  return std::numbers::pi / gap;
}

SplitPair make_split_pair(const EigenSystem& plus, const EigenSystem& minus,
                          const CorrespondencePair& pair) {
  SplitPair sp;
  sp.lambda_plus = plus.eigenvalues(pair.index_plus);
  sp.lambda_minus = minus.eigenvalues(pair.index_minus);
  sp.tau = tunneling_period(sp.lambda_plus, sp.lambda_minus);
  sp.source = pair;
  return sp;
}

Eigen::VectorXcd evolve(const EigenSystem& es, const Eigen::VectorXcd& psi0,
                        double t, double energy_shift) {
  if (psi0.size() != es.dim())
    throw std::invalid_argument("state dimension does not match the system");
  const Eigen::VectorXcd c = es.eigenvectors.transpose() * psi0;
  const Eigen::VectorXcd cp =
      c.cwiseProduct(phases(es.eigenvalues, t, energy_shift));
  return es.eigenvectors * cp;
}

SpinProjector SpinProjector::around(const Coord& x, const LatticeBox& box) {
  SpinProjector p;
  p.center = x;
  const double half = l1_norm(x) / 2.0;
  const std::size_t n = box.n_sites();
  for (std::size_t i = 0; i < n; ++i) {
    // the center itself always belongs (half-window degenerates at x = 0)
    const Coord u = box.site(i);
    if (l1_dist(u, x) < half || u == x) {
      p.basis_indices.push_back(i);
      p.basis_indices.push_back(n + i);
    }
  }
  return p;
}

double SpinProjector::norm_of_projection(const Eigen::VectorXcd& psi) const {
  double s = 0;
  for (std::size_t idx : basis_indices) s += std::norm(psi(idx));
  return std::sqrt(s);
}

TunnelingTrace spin_flip_experiment(const EigenSystem& spin_es,
                                    const EigenSystem& plus,
                                    const EigenSystem& minus,
                                    const CorrespondencePair& pair,
                                    const GridSpec& grid,
                                    double min_overlap) {
  if (!spin_es.spinful)
    throw std::invalid_argument("spin_flip_experiment needs the spin system");
  if (pair.overlap < min_overlap)
    throw std::invalid_argument("pair below overlap threshold");
  const std::size_t n = spin_es.box.n_sites();
  const Eigen::VectorXd phi = plus.eigenvectors.col(pair.index_plus);

  TunnelingTrace trace;
  trace.epsilon = 1.0 - pair.overlap;
  const double lp = plus.eigenvalues(pair.index_plus);
  const double lm = minus.eigenvalues(pair.index_minus);
  trace.tau = tunneling_period(lp, lm);

  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(2 * n);
  psi0.head(n) = phi.cast<std::complex<double>>();

  // time grid: uniform over [0, 2 tau] plus windows around n tau
  struct TimePoint {
    double t;
    int window_n;  // -1 outside windows
  };
  std::vector<TimePoint> pts;
  const int uniform_n = 2 * grid.points_per_period;
  for (int k = 0; k <= uniform_n; ++k)
    pts.push_back({2.0 * trace.tau * k / uniform_n, -1});
  for (int m = 0; m <= grid.n_max; ++m) {
    const double w = grid.window_fraction * trace.tau;
    for (int k = 0; k < grid.window_points; ++k) {
      const double off = -w + 2.0 * w * k / (grid.window_points - 1);
      const double t = m * trace.tau + off;
      if (t >= 0) pts.push_back({t, m});
    }
  }
  std::sort(pts.begin(), pts.end(),
            [](const TimePoint& a, const TimePoint& b) { return a.t < b.t; });

  const SpinProjector proj = SpinProjector::around(pair.center_plus,
                                                   spin_es.box);
  // spectral coefficients of psi0 and of the fidelity targets
  const Eigen::VectorXcd c = spin_es.eigenvectors.transpose() * psi0;
  Eigen::VectorXd up_target = Eigen::VectorXd::Zero(2 * n);
  up_target.head(n) = phi;
  Eigen::VectorXd down_target = Eigen::VectorXd::Zero(2 * n);
  down_target.tail(n) = phi;
  const Eigen::VectorXd d_up = spin_es.eigenvectors.transpose() * up_target;
  const Eigen::VectorXd d_down = spin_es.eigenvectors.transpose() * down_target;
  // rows of the eigenvector matrix inside the containment window
  Eigen::MatrixXd W(proj.basis_indices.size(), spin_es.dim());
  for (std::size_t r = 0; r < proj.basis_indices.size(); ++r)
    W.row(r) = spin_es.eigenvectors.row(proj.basis_indices[r]);

  trace.min_containment = 1.0;
  double max_window_offset = 0;
  for (const TimePoint& tp : pts) {
    const Eigen::VectorXcd ph = phases(spin_es.eigenvalues, tp.t, lp);
    const Eigen::VectorXcd cp = c.cwiseProduct(ph);
    TraceSample s;
    s.t = tp.t;
    s.fidelity_up = std::abs(d_up.cast<std::complex<double>>().dot(cp));
    s.fidelity_down = std::abs(d_down.cast<std::complex<double>>().dot(cp));
    s.containment = (W * cp).norm();
    trace.samples.push_back(s);
    trace.min_containment = std::min(trace.min_containment, s.containment);
    if (tp.window_n >= 0) {
      // defect against e^{-it lambda+} |phi,(-1)^n>; with the lambda+ phase
      // reference the target phase is 1
      const Eigen::VectorXd& target =
          (tp.window_n % 2 == 0) ? d_up : d_down;
      const double defect =
          (cp - target.cast<std::complex<double>>()).norm();
      trace.max_defect = std::max(trace.max_defect, defect);
      max_window_offset = std::max(
          max_window_offset, std::abs(tp.t - tp.window_n * trace.tau) /
                                 trace.tau);
    }
  }
  trace.defect_bound = 4.0 * (max_window_offset + trace.epsilon);
  return trace;
}

CorrelatorResult spin_correlator(const EigenSystem& spin_es, const Coord& x,
                                 const Coord& y, const TimeGrid& grid) {
  if (!spin_es.spinful)
    throw std::invalid_argument("spin_correlator needs the spin system");
  const std::size_t n = spin_es.box.n_sites();
  const std::size_t ix = spin_es.box.index_of(x);          // (x,+1)
  const std::size_t iy = n + spin_es.box.index_of(y);      // (y,-1)
  Eigen::VectorXd coeff(spin_es.dim());
  for (int k = 0; k < spin_es.dim(); ++k)
    coeff(k) = spin_es.eigenvectors(ix, k) * spin_es.eigenvectors(iy, k);

  CorrelatorResult res;
  res.certified_upper_bound = coeff.cwiseAbs().sum();
  if (grid.n_points < 2 || !(grid.t_max > grid.t_min) || !(grid.t_min > 0))
    throw std::invalid_argument("invalid correlator time grid");
  const double log_ratio = std::log(grid.t_max / grid.t_min);
  for (int k = 0; k < grid.n_points; ++k) {
    const double t =
        grid.t_min * std::exp(log_ratio * k / (grid.n_points - 1));
    std::complex<double> amp = 0;
    for (int m = 0; m < spin_es.dim(); ++m)
      amp += coeff(m) * phase_factor(spin_es.eigenvalues(m), t);
    const double a = std::abs(amp);
    res.sup_amp = std::max(res.sup_amp, a);
    res.sup_rate = std::max(res.sup_rate, a / t);
  }
  return res;
}

}  // namespace spintunnel
