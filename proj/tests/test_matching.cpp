#include <doctest.h>

#include <cmath>

#include "spintunnel/matching.hpp"

using namespace spintunnel;

namespace {

ModelParams delta_params(double gamma, double g) {
  ModelParams p;
  p.gamma = gamma;
  p.g = g;
  p.zeta = SparseVec::delta({0});
  return p;
}

}  // namespace

TEST_CASE("min spacing") {
  CHECK(min_spacing(std::vector<double>{0, 1, 3}) == doctest::Approx(1));
  CHECK(min_spacing(std::vector<double>{2, 2}) == doctest::Approx(0));
  CHECK_THROWS(min_spacing(std::vector<double>{5}));
  SUBCASE("decoupled spin system is doubly degenerate") {
    const LatticeBox box(1, {0}, 10);
    const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 77));
    const EigenSystem es =
        diagonalize(build_spin_H(box, delta_params(0.1, 0.0), V));
    // consecutive pairs coincide
    for (int i = 0; i + 1 < es.dim(); i += 2)
      CHECK(std::abs(es.eigenvalues(i + 1) - es.eigenvalues(i)) <= 1e-10);
    CHECK(min_spacing(es.eigenvalues) <= 1e-10);
  }
}

TEST_CASE("minami statistic") {
  const LatticeBox box(1, {0}, 8);
  const DisorderSpec d = DisorderSpec::uniform(0.5, 0);
  SUBCASE("vanishing window") {
    const BinomialEstimate e = minami_statistic(box, 0.1, d, 1e-15, 30, 5);
    CHECK(e.p_hat == 0.0);
  }
  SUBCASE("single-site box rejected") {
    CHECK_THROWS(minami_statistic(LatticeBox(1, {0}, 0), 0.1, d, 1e-2, 5, 5));
  }
  SUBCASE("monotone in the window width") {
    const BinomialEstimate small = minami_statistic(box, 0.1, d, 1e-3, 100, 5);
    const BinomialEstimate big = minami_statistic(box, 0.1, d, 1e-1, 100, 5);
    CHECK(small.p_hat <= big.p_hat);
    CHECK(big.ci_low <= big.p_hat);
    CHECK(big.p_hat <= big.ci_high);
  }
}

TEST_CASE("scale sequence geometry") {
  const SparseVec zeta = SparseVec::delta({0});
  const ScaleSequence seq = scale_sequence({2}, 2, 0.3, zeta);
  SUBCASE("k = 1") {
    CHECK(seq.boxes[0].center() == Coord{6});
    CHECK(seq.boxes[0].radius() == 2);  // Lambda_1 = [4, 8]
    CHECK(seq.boxes[0].contains({4}));
    CHECK(seq.boxes[0].contains({8}));
    CHECK_FALSE(seq.boxes[0].contains({9}));
  }
  SUBCASE("k = 2 and disjointness") {
    CHECK(seq.boxes[1].center() == Coord{18});
    CHECK(seq.boxes[1].radius() == 6);  // Lambda_2 = [12, 24]
    CHECK(seq.boxes[0].disjoint_from(seq.boxes[1]));
    CHECK(seq.boxes_plus[0].disjoint_from(seq.boxes_plus[1]));
  }
  SUBCASE("2L <= |x| <= 4L on Lambda_1") {
    const LatticeBox& b = seq.boxes[0];
    for (std::size_t i = 0; i < b.n_sites(); ++i) {
      const int a = l1_norm(b.site(i));
      CHECK(a >= 2 * b.radius());
      CHECK(a <= 4 * b.radius());
    }
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS(scale_sequence({0}, 1, 0.3, zeta));
    CHECK_THROWS(scale_sequence({2}, 1, 1.5, zeta));
  }
}

TEST_CASE("psi matching map") {
  const LatticeBox host(1, {0}, 60);
  const ModelParams p = delta_params(0.1, 0.5);
  const DisorderSpec d = DisorderSpec::uniform(2.0, 13);
  const auto V = sample_potential(host, d);

  SUBCASE("outer equals host: identity map with zero gaps") {
    const EigenSystem es = diagonalize(build_H(host, 0.1, V));
    const LocalizationProfile prof = localization_profile(es);
    const LocalIndexSet local = local_index_set(es, prof, host);
    const SpectralMap map = build_psi_map(es, local, es);
    CHECK(map.injective);
    for (const PsiAssignment& a : map.assignments) {
      CHECK(a.gap <= 1e-9);
      CHECK(a.residual_norm <= 1e-9);
    }
  }
  SUBCASE("gamma = 0: restrictions are exact eigenvectors") {
    const EigenSystem es = diagonalize(build_H(host, 0.0, V));
    const LocalizationProfile prof = localization_profile(es);
    const LatticeBox lambda(1, {30}, 10);
    const LocalIndexSet local = local_index_set(es, prof, lambda);
    const LatticeBox outer_box(1, {30}, 15);
    std::vector<double> Vo(outer_box.n_sites());
    for (std::size_t i = 0; i < Vo.size(); ++i)
      Vo[i] = V[host.index_of(outer_box.site(i))];
    const EigenSystem outer = diagonalize(build_H(outer_box, 0.0, Vo));
    const SpectralMap map = build_psi_map(es, local, outer);
    for (const PsiAssignment& a : map.assignments) {
      CHECK(a.residual_norm <= 1e-9);
      CHECK(a.gap <= 1e-9);
    }
  }
  SUBCASE("gap bounded by the residual norm") {
    // L = 20, beta = 0.5 fattening
    const EigenSystem es = diagonalize(build_H(host, 0.1, V));
    const LocalizationProfile prof = localization_profile(es);
    const LatticeBox lambda(1, {30}, 20);
    const LatticeBox outer_box(1, {30}, 30);
    std::vector<double> Vo(outer_box.n_sites());
    for (std::size_t i = 0; i < Vo.size(); ++i)
      Vo[i] = V[host.index_of(outer_box.site(i))];
    const EigenSystem outer = diagonalize(build_H(outer_box, 0.1, Vo));
    const LocalIndexSet local = local_index_set(es, prof, lambda);
    const SpectralMap map = build_psi_map(es, local, outer);
    CHECK(map.assignments.size() > 0);
    for (const PsiAssignment& a : map.assignments)
      CHECK(a.gap <= a.residual_norm + 1e-12);
  }
}

TEST_CASE("corresponding pairs") {
  const LatticeBox host(1, {0}, 45);
  const ModelParams p = delta_params(0.1, 0.5);
  const auto V = sample_potential(host, DisorderSpec::uniform(2.0, 3));
  const EigenSystem plus = diagonalize(build_H_g(host, p, 0.5, V));
  const EigenSystem minus = diagonalize(build_H_g(host, p, -0.5, V));
  const LocalizationProfile pp = localization_profile(plus);
  const LocalizationProfile pm = localization_profile(minus);

  SUBCASE("identical operators pair with themselves") {
    const auto pairs =
        find_corresponding_pairs(plus, pp, plus, pp, host, 1e-6);
    CHECK(pairs.size() == static_cast<std::size_t>(plus.dim()));
    for (const auto& pr : pairs) {
      CHECK(pr.index_plus == pr.index_minus);
      CHECK(pr.overlap == doctest::Approx(1.0));
      CHECK(pr.eigenvalue_gap == 0.0);
    }
  }
  SUBCASE("eps = 0 gives no pairs") {
    CHECK(find_corresponding_pairs(plus, pp, plus, pp, host, 0.0).empty());
  }
  SUBCASE("distant box carries a near-perfect pair on this seed") {
    const LatticeBox far(1, {30}, 10);
    const auto pairs =
        find_corresponding_pairs(plus, pp, minus, pm, far, 0.1);
    REQUIRE(pairs.size() > 0);
    CHECK(pairs.front().overlap > 0.99);
    for (const auto& pr : pairs) {
      CHECK(far.contains(pr.center_plus));
      CHECK(far.contains(pr.center_minus));
      CHECK(pr.overlap <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("pair count audit") {
  const LatticeBox lambda(1, {81}, 27);
  SUBCASE("vacuous when the lower bound is nonpositive") {
    // beta = 0.3 in d=1: 2 alpha (1-beta) < (1+beta), bound always < 0
    const LatticeBox lp(1, {81}, 36), lm(1, {81}, 18);
    const PairCountAudit a = pair_count_audit(10, lambda, lp, lm, 1.0, 0.9);
    CHECK(a.lower_bound <= 0);
    CHECK(a.status == AuditStatus::Vacuous);
  }
  SUBCASE("hypothesis gate") {
    const LatticeBox lp(1, {81}, 33), lm(1, {81}, 21);  // beta = 0.2
    const double thr = std::pow(27.0, -3.0);
    const PairCountAudit a =
        pair_count_audit(50, lambda, lp, lm, thr / 2, 0.9);
    CHECK(a.status == AuditStatus::HypothesisFailed);
  }
  SUBCASE("pass and fail against a positive bound") {
    const LatticeBox lp(1, {81}, 33), lm(1, {81}, 21);
    const PairCountAudit pass =
        pair_count_audit(50, lambda, lp, lm, 1.0, 0.9);
    CHECK(pass.lower_bound > 0);
    CHECK(pass.status == AuditStatus::Pass);
    const PairCountAudit fail =
        pair_count_audit(3, lambda, lp, lm, 1.0, 0.9);
    CHECK(fail.status == AuditStatus::Fail);
  }
}

TEST_CASE("pair count lower bound holds on an ensemble") {
  // beta = 0.2 keeps the bound positive in d=1; majority of realizations
  // with a valid spacing hypothesis should pass
  const ModelParams p = delta_params(0.1, 0.5);
  const ScaleSequence seq = scale_sequence({3}, 2, 0.2, p.zeta);
  const LatticeBox& lambda = seq.boxes[1];  // L = 9 at u = 27
  const LatticeBox& lp = seq.boxes_plus[1];
  const LatticeBox& lm = seq.boxes_minus[1];
  const LatticeBox host(1, {0}, 45);
  REQUIRE(host.contains_box(lp));
  int pass = 0, considered = 0;
  const int n_seeds = 40;
  for (int s = 0; s < n_seeds; ++s) {
    const auto V = sample_potential(
        host, DisorderSpec::uniform(2.0, derive_seed(17, s)));
    const EigenSystem plus = diagonalize(build_H_g(host, p, 0.5, V));
    const EigenSystem minus = diagonalize(build_H_g(host, p, -0.5, V));
    const auto pairs = find_corresponding_pairs(
        plus, localization_profile(plus), minus, localization_profile(minus),
        lambda, 0.1);
    std::vector<double> Vo(lp.n_sites());
    for (std::size_t i = 0; i < Vo.size(); ++i)
      Vo[i] = V[host.index_of(lp.site(i))];
    const EigenSystem outer = diagonalize(build_H(lp, 0.1, Vo));
    const PairCountAudit audit =
        pair_count_audit(static_cast<int>(pairs.size()), lambda, lp, lm,
                         min_spacing(outer.eigenvalues), 0.9);
    if (audit.status == AuditStatus::HypothesisFailed) continue;
    ++considered;
    if (audit.status == AuditStatus::Pass) ++pass;
  }
  REQUIRE(considered > n_seeds / 2);
  CHECK(pass > considered / 2);
}
