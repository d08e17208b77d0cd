#include <doctest.h>

#include <cmath>
#include <random>

#include "spintunnel/spectral.hpp"

using namespace spintunnel;

namespace {

OperatorMatrix wrap(const Eigen::MatrixXd& m, const LatticeBox& box,
                    bool spinful = false) {
  return OperatorMatrix{OperatorKind::H, m, box, spinful};
}

ModelParams delta_params(double gamma, double g) {
  ModelParams p;
  p.gamma = gamma;
  p.g = g;
  p.zeta = SparseVec::delta({0});
  return p;
}

}  // namespace

TEST_CASE("diagonalize micro cases") {
  SUBCASE("diagonal input") {
    const LatticeBox box(1, {0}, 1);
    Eigen::MatrixXd m = Eigen::Vector3d(3, 1, 2).asDiagonal();
    const EigenSystem es = diagonalize(wrap(m, box));
    CHECK(es.eigenvalues(0) == doctest::Approx(1));
    CHECK(es.eigenvalues(1) == doctest::Approx(2));
    CHECK(es.eigenvalues(2) == doctest::Approx(3));
    // permutation eigenvectors: one unit entry per column
    for (int c = 0; c < 3; ++c)
      CHECK(es.eigenvectors.col(c).cwiseAbs().maxCoeff() ==
            doctest::Approx(1.0));
  }
  SUBCASE("2x2 hopping block") {
    const LatticeBox box(1, {0}, 0);
    Eigen::MatrixXd m(2, 2);
    m << 0, 0.3, 0.3, 0;
    // 2-dim spinful basis over a 1-site box
    const EigenSystem es = diagonalize(wrap(m, box, true));
    CHECK(es.eigenvalues(0) == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(es.eigenvalues(1) == doctest::Approx(0.3).epsilon(1e-12));
    (void)box;
  }
  SUBCASE("random 50x50 instance: orthonormality and residuals") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd m(50, 50);
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = gauss(rng);
    // 25 sites, spinful basis of dim 50
    const EigenSystem es = diagonalize(wrap(m, LatticeBox(1, {0}, 12), true));
    const Eigen::MatrixXd gram =
        es.eigenvectors.transpose() * es.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff() <=
          1e-9);
    for (int i = 0; i < 50; ++i) {
      const double r =
          (m * es.eigenvectors.col(i) - es.eigenvalues(i) * es.eigenvectors.col(i))
              .norm();
      CHECK(r <= es.residual_max + 1e-15);
    }
    CHECK(es.residual_max <= 1e-10 * m.cwiseAbs().maxCoeff() * 50);
  }
}

TEST_CASE("completeness and shift invariance") {
  const LatticeBox box(1, {0}, 15);
  const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 4));
  const OperatorMatrix A = build_H(box, 0.1, V);
  const EigenSystem es = diagonalize(A);
  SUBCASE("resolution of the identity") {
    const Eigen::MatrixXd P = es.eigenvectors * es.eigenvectors.transpose();
    CHECK((P - Eigen::MatrixXd::Identity(es.dim(), es.dim()))
              .cwiseAbs()
              .maxCoeff() <= 1e-9);
  }
  SUBCASE("potential shift moves the spectrum rigidly") {
    std::vector<double> Vs = V;
    for (double& v : Vs) v += 2.5;
    const EigenSystem shifted = diagonalize(build_H(box, 0.1, Vs));
    CHECK((shifted.eigenvalues - es.eigenvalues.array().matrix())
              .cwiseAbs()
              .maxCoeff() == doctest::Approx(2.5).epsilon(1e-10));
    CHECK((shifted.eigenvectors.cwiseAbs() - es.eigenvectors.cwiseAbs())
              .cwiseAbs()
              .maxCoeff() <= 1e-8);
  }
}

TEST_CASE("localization centers") {
  const LatticeBox box(1, {0}, 5);
  SUBCASE("delta vector") {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(11);
    phi(box.index_of({3})) = 1.0;
    CHECK(localization_center(phi, box) == Coord{3});
  }
  SUBCASE("gamma = 0: center equals the support site") {
    const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 8));
    const EigenSystem es = diagonalize(build_H(box, 0.0, V));
    for (int i = 0; i < es.dim(); ++i) {
      int support = 0;
      es.eigenvectors.col(i).cwiseAbs().maxCoeff(&support);
      CHECK(localization_center(es.eigenvectors.col(i), box) ==
            box.site(static_cast<std::size_t>(support)));
    }
  }
  SUBCASE("lexicographic tie break") {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(11);
    phi(box.index_of({-2})) = 0.5;
    phi(box.index_of({2})) = 0.5;
    CHECK(localization_center(phi, box) == Coord{-2});
  }
  SUBCASE("zero vector rejected") {
    CHECK_THROWS(localization_center(Eigen::VectorXd::Zero(11), box));
  }
}

TEST_CASE("sule envelope fit") {
  SUBCASE("gamma = 0 hits the slope cap") {
    const LatticeBox box(1, {0}, 10);
    const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 12));
    const EigenSystem es = diagonalize(build_H(box, 0.0, V));
    const LocalizationProfile prof = localization_profile(es);
    CHECK(prof.sule.cap_reached);
    CHECK(prof.sule.xi == doctest::Approx(kSuleSlopeCap));
  }
  SUBCASE("synthetic exponential profile recovers the rate") {
    const LatticeBox box(1, {0}, 30);
    const int n = static_cast<int>(box.n_sites());
    EigenSystem es{Eigen::VectorXd::LinSpaced(n, -1, 1),
                   Eigen::MatrixXd::Zero(n, n), 0.0, OperatorKind::H, box,
                   false};
    std::vector<Coord> centers;
    for (int i = 0; i < n; ++i) {
      const Coord xi = box.site(static_cast<std::size_t>(i));
      centers.push_back(xi);
      // amplitude carries the center weight so the envelope is exactly
      // A (1+|x_i|)^{d+1} e^{-0.7 |x - x_i|}
      const double w = std::pow(1.0 + l1_norm(xi), 2.0);
      for (int j = 0; j < n; ++j)
        es.eigenvectors(j, i) = w * std::exp(-0.7 * l1_dist(box.site(j), xi));
    }
    const SuleFit fit = sule_fit(es, centers);
    CHECK(fit.xi == doctest::Approx(0.7).epsilon(0.015));
    CHECK(fit.A == doctest::Approx(1.0).epsilon(0.05));
    CHECK_FALSE(fit.cap_reached);
  }
  SUBCASE("anderson chain N=101 has a positive fitted rate") {
    const LatticeBox box(1, {0}, 50);
    const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 31));
    const EigenSystem es = diagonalize(build_H(box, 0.1, V));
    const LocalizationProfile prof = localization_profile(es);
    CHECK(prof.sule.xi > 0);
    CHECK(prof.sule.fit_residual < 5.0);  // log-scale RMS envelope scatter
    // oracle: two-point decay of a mid-spectrum eigenvector
    const int i = es.dim() / 2;
    const Coord c = prof.centers[static_cast<std::size_t>(i)];
    double far = 0;
    for (int j = 0; j < es.dim(); ++j)
      if (l1_dist(box.site(static_cast<std::size_t>(j)), c) >= 20)
        far = std::max(far, std::abs(es.eigenvectors(j, i)));
    CHECK(far < 1e-3);  // consistent with xi > 0 over distance >= 20
  }
}

TEST_CASE("local projection estimates") {
  const LatticeBox host(1, {0}, 40);
  const auto V = sample_potential(host, DisorderSpec::uniform(2.0, 6));
  const ModelParams p = delta_params(0.1, 0.5);
  const EigenSystem es = diagonalize(build_H_g(host, p, 0.5, V));
  const LocalizationProfile prof = localization_profile(es);
  const LatticeBox lambda(1, {20}, 10);

  SUBCASE("whole host box captures everything") {
    const LocalProjectionReport rep =
        local_projections(es, prof, host, 0);
    CHECK(rep.norm_out <= 1e-10);
  }
  SUBCASE("gamma = 0 at ell = 0 is exact") {
    const EigenSystem diag = diagonalize(build_H(host, 0.0, V));
    const LocalizationProfile dprof = localization_profile(diag);
    const LocalProjectionReport rep =
        local_projections(diag, dprof, lambda, 0);
    CHECK(rep.norm_out <= 1e-12);
    CHECK(rep.norm_in <= 1e-12);
  }
  SUBCASE("monotone in the fattening width") {
    const LocalProjectionReport r5 = local_projections(es, prof, lambda, 5);
    const LocalProjectionReport r10 = local_projections(es, prof, lambda, 10);
    CHECK(r10.norm_out <= r5.norm_out + 1e-12);
    CHECK(r10.norm_in <= r5.norm_in + 1e-12);
  }
  SUBCASE("trace chain bound") {
    const LocalProjectionReport rep = local_projections(es, prof, lambda, 8);
    CHECK((1.0 - rep.norm_out) * rep.count_box <= rep.trace_cross + 1e-9);
    CHECK(rep.trace_cross <= rep.count_plus + 1e-9);
  }
}

TEST_CASE("box concentration over an ensemble") {
  // alpha-count sandwich holds in at least 90% of realizations
  const LatticeBox host(1, {0}, 100);
  const ModelParams p = delta_params(0.1, 0.5);
  const LatticeBox lambda(1, {40}, 20);
  const double alpha = 0.9;
  int good = 0;
  const int n_seeds = 50;
  for (int s = 0; s < n_seeds; ++s) {
    const auto V = sample_potential(
        host, DisorderSpec::uniform(2.0, derive_seed(1000, s)));
    const EigenSystem es = diagonalize(build_H_g(host, p, 0.5, V));
    const LocalizationProfile prof = localization_profile(es);
    const LocalProjectionReport rep = local_projections(es, prof, lambda, 15);
    if (alpha * rep.count_minus <= rep.count_box &&
        rep.count_box <= rep.count_plus / alpha)
      ++good;
  }
  CHECK(good >= static_cast<int>(0.9 * n_seeds));
}

TEST_CASE("participation ratio") {
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(8);
  delta(3) = 1.0;
  CHECK(participation_ratio(delta) == doctest::Approx(1.0));
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(8, 1.0 / std::sqrt(8.0));
  CHECK(participation_ratio(flat) == doctest::Approx(8.0));
}
