#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spintunnel/dynamics.hpp"

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

TEST_CASE("tunneling period") {
  CHECK(tunneling_period(std::numbers::pi, 0.0) == doctest::Approx(1.0));
  CHECK(tunneling_period(1e-6, 0.0) ==
        doctest::Approx(std::numbers::pi * 1e6));
  CHECK_THROWS(tunneling_period(2.0, 2.0));
}

TEST_CASE("spectral propagator") {
  const LatticeBox box(1, {0}, 10);
  const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 2));
  const EigenSystem es =
      diagonalize(build_spin_H(box, delta_params(0.1, 0.5), V));

  SUBCASE("t = 0 is the identity") {
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(es.dim());
    psi0(5) = 1.0;
    CHECK((evolve(es, psi0, 0.0) - psi0).norm() <= 1e-9);
  }
  SUBCASE("eigenvectors evolve by a pure phase") {
    const Eigen::VectorXcd v =
        es.eigenvectors.col(7).cast<std::complex<double>>();
    const Eigen::VectorXcd vt = evolve(es, v, 3.7);
    CHECK(std::abs(std::abs(v.dot(vt)) - 1.0) <= 1e-10);
  }
  SUBCASE("unitarity over long times") {
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(es.dim());
    psi0(3) = 1.0;
    CHECK(std::abs(evolve(es, psi0, 1e9).norm() - 1.0) <= 1e-8);
  }
}

TEST_CASE("two-level rabi oscillation") {
  // single site, gamma = 0, g = 1, V = 0: the spin system is [[0,1],[1,0]]
  const LatticeBox box(1, {0}, 0);
  const std::vector<double> V = {0.0};
  const ModelParams p = delta_params(0.0, 1.0);
  const EigenSystem es = diagonalize(build_spin_H(box, p, V));
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(2);
  psi0(0) = 1.0;  // |0, +1>
  for (double t : {0.3, 1.0, 2.2, std::numbers::pi / 2}) {
    const Eigen::VectorXcd psi = evolve(es, psi0, t);
    CHECK(std::abs(psi(1)) == doctest::Approx(std::abs(std::sin(t))).epsilon(1e-10));
    CHECK(std::abs(psi(0)) == doctest::Approx(std::abs(std::cos(t))).epsilon(1e-10));
  }
}

TEST_CASE("rabi toy through the full experiment") {
  const LatticeBox box(1, {0}, 0);
  const std::vector<double> V = {0.0};
  const ModelParams p = delta_params(0.0, 1.0);
  const EigenSystem spin_es = diagonalize(build_spin_H(box, p, V));
  const EigenSystem plus = diagonalize(build_H_g(box, p, 1.0, V));
  const EigenSystem minus = diagonalize(build_H_g(box, p, -1.0, V));
  CorrespondencePair pair;
  pair.index_plus = 0;
  pair.index_minus = 0;
  pair.overlap = 1.0;
  pair.eigenvalue_gap = 2.0;
  pair.center_plus = {0};
  pair.center_minus = {0};
  GridSpec grid;
  grid.points_per_period = 512;
  const TunnelingTrace trace =
      spin_flip_experiment(spin_es, plus, minus, pair, grid);
  CHECK(trace.tau == doctest::Approx(std::numbers::pi / 2));
  CHECK(trace.min_containment == doctest::Approx(1.0).epsilon(1e-10));
  // fidelity_down at tau reaches 1
  double best = 0;
  for (const auto& s : trace.samples)
    if (std::abs(s.t - trace.tau) < 1e-9) best = s.fidelity_down;
  CHECK(best == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(trace.max_defect <= trace.defect_bound + 1e-12);
}

TEST_CASE("decoupled system never flips") {
  const LatticeBox box(1, {0}, 8);
  const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 4));
  const EigenSystem es =
      diagonalize(build_spin_H(box, delta_params(0.1, 0.0), V));
  const std::size_t n = box.n_sites();
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(2 * n);
  psi0(2) = 1.0;  // an up-spin site
  for (double t : {1.0, 50.0, 1e4}) {
    const Eigen::VectorXcd psi = evolve(es, psi0, t);
    CHECK(psi.tail(n).norm() <= 1e-9);  // fidelity_down stays 0
    CHECK(std::abs(psi.head(n).norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("overlap threshold enforced") {
  const LatticeBox box(1, {0}, 0);
  const std::vector<double> V = {0.0};
  const ModelParams p = delta_params(0.0, 1.0);
  const EigenSystem spin_es = diagonalize(build_spin_H(box, p, V));
  const EigenSystem plus = diagonalize(build_H_g(box, p, 1.0, V));
  CorrespondencePair pair;
  pair.overlap = 0.5;
  pair.center_plus = {0};
  CHECK_THROWS(spin_flip_experiment(spin_es, plus, plus, pair, GridSpec{}));
}

TEST_CASE("spin correlator") {
  const LatticeBox box(1, {0}, 10);
  const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 6));
  SUBCASE("g = 0 vanishes identically") {
    const EigenSystem es =
        diagonalize(build_spin_H(box, delta_params(0.1, 0.0), V));
    const CorrelatorResult r = spin_correlator(es, {3}, {3}, TimeGrid{});
    CHECK(r.sup_amp <= 1e-10);
    CHECK(r.certified_upper_bound <= 1e-9);
  }
  SUBCASE("unitarity and the certified bound") {
    const EigenSystem es =
        diagonalize(build_spin_H(box, delta_params(0.1, 0.5), V));
    for (int r : {0, 2, 5}) {
      const CorrelatorResult res = spin_correlator(es, {r}, {r}, TimeGrid{});
      CHECK(res.sup_amp <= 1.0 + 1e-12);
      CHECK(res.sup_amp <= res.certified_upper_bound + 1e-12);
    }
  }
}
