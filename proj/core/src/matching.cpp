#include "spintunnel/matching.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace spintunnel {

double min_spacing(const std::vector<double>& values) {
  if (values.size() < 2)
    throw std::invalid_argument("min_spacing needs at least 2 values");
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  double m = v[1] - v[0];
  for (std::size_t i = 2; i < v.size(); ++i) m = std::min(m, v[i] - v[i - 1]);
  return m;
}

double min_spacing(const Eigen::VectorXd& values) {
  return min_spacing(
      std::vector<double>(values.data(), values.data() + values.size()));
}

BinomialEstimate binomial_estimate(int hits, int n) {
  BinomialEstimate e;
  e.hits = hits;
  e.n = n;
  e.p_hat = n > 0 ? static_cast<double>(hits) / n : 0.0;
  if (n == 0) return e;
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (e.p_hat + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(e.p_hat * (1 - e.p_hat) / n + z2 / (4.0 * n * n)) / denom;
  e.ci_low = std::max(0.0, center - half);
  e.ci_high = std::min(1.0, center + half);
  return e;
}

BinomialEstimate minami_statistic(const LatticeBox& box, double gamma,
                                  const DisorderSpec& base_disorder,
                                  double eps, int n_seeds,
                                  std::uint64_t base_seed) {
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  if (box.n_sites() < 2)
    throw std::invalid_argument("minami statistic needs at least 2 sites");
  int hits = 0;
  for (int i = 0; i < n_seeds; ++i) {
    DisorderSpec d = base_disorder;
    d.seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
    const auto V = sample_potential(box, d);
    const EigenSystem es = diagonalize(build_H(box, gamma, V));
    if (min_spacing(es.eigenvalues) < eps) ++hits;
  }
  return binomial_estimate(hits, n_seeds);
}

ScaleSequence scale_sequence(const Coord& u0, int k_max, double beta,
                             const SparseVec& zeta) {
  if (l1_norm(u0) == 0)
    throw std::invalid_argument("scale sequence base site must be nonzero");
  if (!(beta > 0) || !(beta < 1))
    throw std::invalid_argument("beta must lie in (0,1)");
  ScaleSequence seq;
  seq.u0 = u0;
  seq.beta = beta;
  const int d = static_cast<int>(u0.size());
  long pow3 = 1;  // 3^{k-1}
  for (int k = 1; k <= k_max; ++k) {
    pow3 *= (k == 1) ? 1 : 3;
    Coord u(d);
    long scale = pow3 * 3;  // 3^k
    for (int j = 0; j < d; ++j) u[j] = static_cast<int>(scale * u0[j]);
    const int L = static_cast<int>(pow3 * l1_norm(u0));
    const int Lp = static_cast<int>(std::ceil((1 + beta) * L));
    const int Lm = static_cast<int>(std::floor((1 - beta) * L));
    seq.boxes.emplace_back(d, u, L);
    seq.boxes_plus.emplace_back(d, u, Lp);
    seq.boxes_minus.emplace_back(d, u, Lm);
  }
  for (std::size_t a = 0; a < seq.boxes_plus.size(); ++a) {
    for (std::size_t b = a + 1; b < seq.boxes_plus.size(); ++b)
      if (!seq.boxes_plus[a].disjoint_from(seq.boxes_plus[b]))
        throw std::invalid_argument("fattened scale boxes overlap");
    for (const auto& [x, amp] : zeta.terms)
      if (seq.boxes[a].contains(x))
        throw std::invalid_argument("zeta support intersects a scale box");
  }
  return seq;
}

SpectralMap build_psi_map(const EigenSystem& host, const LocalIndexSet& local,
                          const EigenSystem& outer) {
  if (host.spinful || outer.spinful)
    throw std::invalid_argument("psi map expects spinless systems");
  if (!host.box.contains_box(outer.box))
    throw std::invalid_argument("outer box escapes the host box");
  const std::size_t m = outer.box.n_sites();
  // host indices of the outer-box sites
  std::vector<std::size_t> sub(m);
  for (std::size_t i = 0; i < m; ++i)
    sub[i] = host.box.index_of(outer.box.site(i));

  // reconstruct H_{Lambda+} from the outer decomposition
  const Eigen::MatrixXd Hout = outer.eigenvectors *
                               outer.eigenvalues.asDiagonal() *
                               outer.eigenvectors.transpose();

  SpectralMap map;
  std::set<int> used;
  bool collision = false;
  for (std::size_t c = 0; c < local.indices.size(); ++c) {
    const int i = local.indices[c];
    Eigen::VectorXd r(m);
    for (std::size_t k = 0; k < m; ++k) r(k) = host.eigenvectors(sub[k], i);
    const double nr = r.norm();
    if (nr <= 0.5)
      throw std::runtime_error(
          "restriction norm <= 1/2: matching hypothesis failed");
    r /= nr;
    const double lambda = host.eigenvalues(i);
    PsiAssignment a;
    a.inner_index = i;
    a.lambda = lambda;
    a.residual_norm = (Hout * r - lambda * r).norm();
    int best = 0;
    double best_gap = std::abs(lambda - outer.eigenvalues(0));
    for (int j = 1; j < outer.dim(); ++j) {
      const double gap = std::abs(lambda - outer.eigenvalues(j));
      if (gap < best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    a.outer_index = best;
    a.eta = outer.eigenvalues(best);
    a.gap = best_gap;
    if (!used.insert(best).second) collision = true;
    map.assignments.push_back(a);
  }
  map.injective = !collision;
  return map;
}

std::vector<CorrespondencePair> find_corresponding_pairs(
    const EigenSystem& plus, const LocalizationProfile& plus_profile,
    const EigenSystem& minus, const LocalizationProfile& minus_profile,
    const LatticeBox& box, double eps) {
  std::vector<CorrespondencePair> candidates;
  for (int i = 0; i < plus.dim(); ++i) {
    if (!box.contains(plus_profile.centers[i])) continue;
    for (int j = 0; j < minus.dim(); ++j) {
      if (!box.contains(minus_profile.centers[j])) continue;
      const double gap =
          std::abs(plus.eigenvalues(i) - minus.eigenvalues(j));
      if (!(gap < eps)) continue;
      const double overlap =
          std::abs(plus.eigenvectors.col(i).dot(minus.eigenvectors.col(j)));
      if (!(overlap > 1.0 - eps)) continue;
      candidates.push_back({i, j, overlap, gap, plus_profile.centers[i],
                            minus_profile.centers[j]});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const CorrespondencePair& a, const CorrespondencePair& b) {
              if (a.overlap != b.overlap) return a.overlap > b.overlap;
              return std::make_pair(a.index_plus, a.index_minus) <
                     std::make_pair(b.index_plus, b.index_minus);
            });
  std::vector<CorrespondencePair> pairs;
  std::set<int> used_plus, used_minus;
  for (const auto& c : candidates) {
    if (used_plus.count(c.index_plus) || used_minus.count(c.index_minus))
      continue;
    used_plus.insert(c.index_plus);
    used_minus.insert(c.index_minus);
    pairs.push_back(c);
  }
  return pairs;
}

PairCountAudit pair_count_audit(int pair_count, const LatticeBox& box,
                                const LatticeBox& box_plus,
                                const LatticeBox& box_minus,
                                double outer_min_spacing, double alpha) {
  PairCountAudit audit;
  audit.count = pair_count;
  audit.lower_bound = 2.0 * alpha * static_cast<double>(box_minus.n_sites()) -
                      static_cast<double>(box_plus.n_sites());
  audit.outer_min_spacing = outer_min_spacing;
  audit.spacing_threshold =
      std::pow(static_cast<double>(box.radius()), -(2.0 * box.dim() + 1.0));
  if (!(outer_min_spacing > audit.spacing_threshold)) {
    audit.status = AuditStatus::HypothesisFailed;
  } else if (audit.lower_bound <= 0) {
    audit.status = AuditStatus::Vacuous;
  } else {
    audit.status = pair_count >= audit.lower_bound ? AuditStatus::Pass
                                                   : AuditStatus::Fail;
  }
  return audit;
}

}  // namespace spintunnel
