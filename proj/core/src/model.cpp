#include "spintunnel/model.hpp"

#include <cmath>
#include <stdexcept>

namespace spintunnel {

double SparseVec::norm2() const {
  double s = 0;
  for (const auto& [x, a] : terms) s += a * a;
  return std::sqrt(s);
}

SparseVec SparseVec::delta(const Coord& x) {
  SparseVec z;
  z.terms.emplace_back(x, 1.0);
  return z;
}

void ModelParams::validate() const {
  if (zeta.terms.empty())
    throw std::invalid_argument("zeta must have nonempty support");
  if (std::abs(zeta.norm2() - 1.0) > 1e-12)
    throw std::invalid_argument("zeta must be normalized to 1");
}

std::size_t OperatorMatrix::basis_index(const Coord& x, int spin) const {
  const std::size_t i = box.index_of(x);
  if (!spinful) return i;
  return spin == +1 ? i : i + box.n_sites();
}

SpinSite OperatorMatrix::basis_site(std::size_t idx) const {
  const std::size_t n = box.n_sites();
  if (!spinful) return {box.site(idx), +1};
  if (idx < n) return {box.site(idx), +1};
  return {box.site(idx - n), -1};
}

static void check_dim_cap(std::size_t dim) {
  if (dim > static_cast<std::size_t>(kMaxDenseDim))
    throw std::invalid_argument(
        "matrix dimension " + std::to_string(dim) + " exceeds the dense cap " +
        std::to_string(kMaxDenseDim));
}

// gamma * centered Laplacian within the box (no diagonal term).
static void add_hopping(Eigen::MatrixXd& M, const LatticeBox& box, double gamma,
                        std::size_t offset = 0) {
  if (gamma == 0) return;
  const std::size_t n = box.n_sites();
  for (std::size_t i = 0; i < n; ++i) {
    Coord x = box.site(i);
    for (int j = 0; j < box.dim(); ++j) {
      Coord y = x;
      y[j] += 1;
      if (!box.contains(y)) continue;  // Dirichlet: drop boundary hopping
      const std::size_t k = box.index_of(y);
      M(offset + i, offset + k) = gamma;
      M(offset + k, offset + i) = gamma;
    }
  }
}

OperatorMatrix build_H(const LatticeBox& box, double gamma,
                       const std::vector<double>& V) {
  const std::size_t n = box.n_sites();
  check_dim_cap(n);
  if (V.size() != n)
    throw std::invalid_argument("potential not defined on every box site");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  add_hopping(M, box, gamma);
  for (std::size_t i = 0; i < n; ++i) M(i, i) = V[i];
  return {OperatorKind::H, std::move(M), box, false};
}

OperatorMatrix build_rank_one(const LatticeBox& box, const SparseVec& zeta) {
  const std::size_t n = box.n_sites();
  check_dim_cap(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  for (const auto& [x, a] : zeta.terms) {
    if (!box.contains(x))
      throw std::invalid_argument("zeta support site " + coord_to_string(x) +
                                  " escapes the box");
    z(box.index_of(x)) = a;
  }
  return {OperatorKind::Restriction, z * z.transpose(), box, false};
}

OperatorMatrix build_H_g(const LatticeBox& box, const ModelParams& params,
                         double g, const std::vector<double>& V) {
  params.validate();
  OperatorMatrix H = build_H(box, params.gamma, V);
  if (g != 0) {
    OperatorMatrix D = build_rank_one(box, params.zeta);
    H.entries += g * D.entries;
  }
  H.kind = OperatorKind::Hg;
  return H;
}

OperatorMatrix build_spin_H(const LatticeBox& box, const ModelParams& params,
                            const std::vector<double>& V) {
  params.validate();
  const std::size_t n = box.n_sites();
  check_dim_cap(2 * n);
  if (V.size() != n)
    throw std::invalid_argument("potential not defined on every box site");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  add_hopping(M, box, params.gamma, 0);
  add_hopping(M, box, params.gamma, n);
  for (std::size_t i = 0; i < n; ++i) {
    M(i, i) = V[i];
    M(n + i, n + i) = V[i];
  }
  if (params.g != 0) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (const auto& [x, a] : params.zeta.terms) {
      if (!box.contains(x))
        throw std::invalid_argument("zeta support site " + coord_to_string(x) +
                                    " escapes the box");
      z(box.index_of(x)) = a;
    }
    const Eigen::MatrixXd Z = params.g * z * z.transpose();
    M.block(0, n, n, n) = Z;
    M.block(n, 0, n, n) = Z;
  }
  return {OperatorKind::SpinH, std::move(M), box, true};
}

OperatorMatrix restrict_to_box(const OperatorMatrix& A, const LatticeBox& sub) {
  if (A.spinful)
    throw std::invalid_argument("restriction implemented for spinless operators");
  if (!A.box.contains_box(sub))
    throw std::invalid_argument("restriction box escapes the parent box");
  const std::size_t m = sub.n_sites();
  Eigen::MatrixXd M(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t pi = A.box.index_of(sub.site(i));
    for (std::size_t j = 0; j < m; ++j)
      M(i, j) = A.entries(pi, A.box.index_of(sub.site(j)));
  }
  return {OperatorKind::Restriction, std::move(M), sub, false};
}

double spin_decomposition_check(const LatticeBox& box,
                                const ModelParams& params,
                                const std::vector<double>& V) {
  const OperatorMatrix hg = build_spin_H(box, params, V);
  const std::size_t n = box.n_sites();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  double dev = 0;
  for (int sign : {+1, -1}) {
    const OperatorMatrix Hpm =
        build_H_g(box, params, sign * params.g, V);
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(2 * n, n);
    U.topRows(n) = inv_sqrt2 * Eigen::MatrixXd::Identity(n, n);
    U.bottomRows(n) = sign * inv_sqrt2 * Eigen::MatrixXd::Identity(n, n);
    dev = std::max(dev, (hg.entries * U - U * Hpm.entries)
                            .cwiseAbs()
                            .maxCoeff());
  }
  return dev;
}

}  // namespace spintunnel
