#include "spintunnel/spectral.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace spintunnel {

EigenSystem diagonalize(const OperatorMatrix& A, double tol) {
  const int n = A.dim();
  if (n > kMaxDenseDim)
    throw std::invalid_argument("dimension cap exceeded in diagonalize");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A.entries);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed to converge");
  EigenSystem es{solver.eigenvalues(), solver.eigenvectors(), 0.0,
                 A.kind, A.box, A.spinful};
  const Eigen::MatrixXd R =
      A.entries * es.eigenvectors -
      es.eigenvectors * es.eigenvalues.asDiagonal();
  es.residual_max = R.colwise().norm().maxCoeff();
  const double scale = std::max(A.entries.cwiseAbs().maxCoeff(), 1e-300);
  if (es.residual_max > tol * scale * n)
    throw std::runtime_error("eigensolver residual exceeds tolerance");
  return es;
}

Coord localization_center(const Eigen::VectorXd& phi, const LatticeBox& box,
                          bool spinful) {
  const std::size_t n = box.n_sites();
  if (phi.size() != static_cast<Eigen::Index>(spinful ? 2 * n : n))
    throw std::invalid_argument("vector length does not match the box");
  if (phi.cwiseAbs().maxCoeff() == 0)
    throw std::invalid_argument("localization center of the zero vector");
  const double expo = box.dim() + 1;
  double best = -1;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double amp = std::abs(phi(i));
    if (spinful) amp = std::max(amp, std::abs(phi(n + i)));
    const Coord x = box.site(i);
    const double w = std::pow(1.0 + l1_norm(x), expo) * amp;
    // strict >: enumeration is lexicographic, so ties keep the smaller site
    if (w > best) {
      best = w;
      best_i = i;
    }
  }
  return box.site(best_i);
}

double participation_ratio(const Eigen::VectorXd& phi) {
  const double s4 = phi.array().square().square().sum();
  if (s4 == 0) throw std::invalid_argument("participation ratio of zero vector");
  return 1.0 / s4;
}

LocalizationProfile localization_profile(const EigenSystem& es) {
  LocalizationProfile p;
  p.centers.reserve(es.dim());
  for (int i = 0; i < es.dim(); ++i)
    p.centers.push_back(
        localization_center(es.eigenvectors.col(i), es.box, es.spinful));
  p.sule = sule_fit(es, p.centers);
  return p;
}

SuleFit sule_fit(const EigenSystem& es, const std::vector<Coord>& centers) {
  if (static_cast<int>(centers.size()) != es.dim())
    throw std::invalid_argument("centers do not match the eigen-system");
  const double expo = es.box.dim() + 1;
  const std::size_t n = es.box.n_sites();
  // envelope: max weighted log-amplitude per l^1 distance from the center
  std::vector<double> env;
  std::vector<bool> seen;
  for (int i = 0; i < es.dim(); ++i) {
    const double wi = expo * std::log(1.0 + l1_norm(centers[i]));
    for (Eigen::Index k = 0; k < es.eigenvectors.rows(); ++k) {
      const double amp = std::abs(es.eigenvectors(k, i));
      if (amp <= kSuleAmplitudeFloor) continue;
      const std::size_t site_i = es.spinful ? (k % n) : k;
      const int r = l1_dist(es.box.site(site_i), centers[i]);
      const double y = std::log(amp) - wi;
      if (static_cast<std::size_t>(r) >= env.size()) {
        env.resize(r + 1, 0.0);
        seen.resize(r + 1, false);
      }
      if (!seen[r] || y > env[r]) {
        env[r] = y;
        seen[r] = true;
      }
    }
  }
  std::vector<double> rs, ys;
  for (std::size_t r = 0; r < env.size(); ++r)
    if (seen[r]) {
      rs.push_back(static_cast<double>(r));
      ys.push_back(env[r]);
    }
  SuleFit fit;
  if (rs.size() < 2) {
    // delta-function limit: arbitrarily steep decay
    fit.xi = kSuleSlopeCap;
    fit.cap_reached = true;
    fit.A = rs.empty() ? 0.0 : std::exp(ys[0]);
    return fit;
  }
  // ordinary least squares y = a + b r
  const double m = static_cast<double>(rs.size());
  double sr = 0, sy = 0, srr = 0, sry = 0;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    sr += rs[k];
    sy += ys[k];
    srr += rs[k] * rs[k];
    sry += rs[k] * ys[k];
  }
  const double denom = m * srr - sr * sr;
  const double b = (m * sry - sr * sy) / denom;
  const double a = (sy - b * sr) / m;
  fit.xi = -b;
  fit.A = std::exp(a);
  if (fit.xi < 0) fit.xi = 0;
  if (fit.xi >= kSuleSlopeCap) {
    fit.xi = kSuleSlopeCap;
    fit.cap_reached = true;
  }
  double ss = 0;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    const double e = ys[k] - (a + b * rs[k]);
    ss += e * e;
  }
  fit.fit_residual = std::sqrt(ss / m);
  return fit;
}

LocalIndexSet local_index_set(const EigenSystem& es,
                              const LocalizationProfile& profile,
                              const LatticeBox& box) {
  LocalIndexSet s{box, {}, {}};
  for (int i = 0; i < es.dim(); ++i)
    if (box.contains(profile.centers[i])) {
      s.indices.push_back(i);
      s.local_spectrum.push_back(es.eigenvalues(i));
    }
  return s;
}

static double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

LocalProjectionReport local_projections(const EigenSystem& es,
                                        const LocalizationProfile& profile,
                                        const LatticeBox& box, int ell) {
  if (es.spinful)
    throw std::invalid_argument("local_projections expects a spinless system");
  if (ell < 0) throw std::invalid_argument("fattening must be nonnegative");
  const LatticeBox plus(box.dim(), box.center(), box.radius() + ell);
  const LatticeBox minus(box.dim(), box.center(),
                         std::max(box.radius() - ell, 0));
  if (!es.box.contains_box(plus))
    throw std::invalid_argument("fattened box escapes the host box");

  const LocalIndexSet I = local_index_set(es, profile, box);
  const std::size_t n = es.box.n_sites();
  Eigen::MatrixXd Phi(n, I.indices.size());
  for (std::size_t c = 0; c < I.indices.size(); ++c)
    Phi.col(c) = es.eigenvectors.col(I.indices[c]);

  LocalProjectionReport rep;
  rep.count_box = static_cast<int>(I.indices.size());
  rep.count_plus = static_cast<int>(plus.n_sites());
  rep.count_minus = static_cast<int>(minus.n_sites());

  // mask of Lambda+ in the host enumeration
  Eigen::VectorXd in_plus = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < plus.n_sites(); ++i)
    in_plus(es.box.index_of(plus.site(i))) = 1.0;

  if (Phi.cols() > 0) {
    const Eigen::MatrixXd out =
        (Eigen::VectorXd::Ones(n) - in_plus).asDiagonal() * Phi;
    rep.norm_out = spectral_norm(out);
    const Eigen::MatrixXd inp = in_plus.asDiagonal() * Phi;
    rep.trace_cross = inp.squaredNorm();
  }

  // columns (1 - P^{(g)}_Lambda) e_x for x in Lambda-
  Eigen::MatrixXd M(n, minus.n_sites());
  for (std::size_t c = 0; c < minus.n_sites(); ++c) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(es.box.index_of(minus.site(c))) = 1.0;
    if (Phi.cols() > 0) e -= Phi * (Phi.transpose() * e);
    M.col(c) = e;
  }
  rep.norm_in = spectral_norm(M);
  return rep;
}

}  // namespace spintunnel
