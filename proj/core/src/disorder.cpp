#include "spintunnel/disorder.hpp"

#include <cmath>
#include <stdexcept>

namespace spintunnel {

// splitmix64 finalizer
std::uint64_t hash_mix(std::uint64_t v) {
  v += 0x9E3779B97F4A7C15ULL;
  v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ULL;
  v = (v ^ (v >> 27)) * 0x94D049BB133111EBULL;
  return v ^ (v >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t i) {
  return hash_mix(hash_mix(base_seed) ^ hash_mix(i + 0x632BE59BD9B4E019ULL));
}

double DisorderSpec::density_sup() const {
  if (law == Law::Uniform) return 1.0 / (2.0 * half_width);
  double m = 0;
  for (double d : bin_density) m = std::max(m, d);
  return m;
}

void DisorderSpec::validate() const {
  if (law == Law::Uniform) {
    if (!(half_width > 0))
      throw std::invalid_argument("disorder: half_width must be positive");
    return;
  }
  if (bin_edges.size() < 2 || bin_density.size() + 1 != bin_edges.size())
    throw std::invalid_argument("disorder: table needs m+1 edges for m bins");
  double mass = 0;
  for (std::size_t k = 0; k < bin_density.size(); ++k) {
    if (!(bin_edges[k + 1] > bin_edges[k]))
      throw std::invalid_argument("disorder: bin edges must increase");
    if (bin_density[k] < 0)
      throw std::invalid_argument("disorder: density must be nonnegative");
    mass += bin_density[k] * (bin_edges[k + 1] - bin_edges[k]);
  }
  if (std::abs(mass - 1.0) > 1e-9)
    throw std::invalid_argument("disorder: density must integrate to 1");
  if (!(density_sup() > 0))
    throw std::invalid_argument("disorder: density sup must be positive");
}

DisorderSpec DisorderSpec::uniform(double half_width, std::uint64_t seed) {
  DisorderSpec s;
  s.law = Law::Uniform;
  s.half_width = half_width;
  s.seed = seed;
  s.validate();
  return s;
}

DisorderSpec DisorderSpec::table(std::vector<double> edges,
                                 std::vector<double> density,
                                 std::uint64_t seed) {
  DisorderSpec s;
  s.law = Law::Table;
  s.bin_edges = std::move(edges);
  s.bin_density = std::move(density);
  s.seed = seed;
  s.validate();
  return s;
}

// Uniform variate in [0,1) from the per-site hash stream.
static double site_uniform(const Coord& x, std::uint64_t seed) {
  std::uint64_t h = hash_mix(seed ^ 0x5851F42D4C957F2DULL);
  h = hash_mix(h ^ static_cast<std::uint64_t>(x.size()));
  for (int c : x)
    h = hash_mix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double potential_at(const Coord& x, const DisorderSpec& spec) {
  const double u = site_uniform(x, spec.seed);
  if (spec.law == DisorderSpec::Law::Uniform)
    return -spec.half_width + 2.0 * spec.half_width * u;
  // inverse CDF of the piecewise-constant density
  double acc = 0;
  for (std::size_t k = 0; k < spec.bin_density.size(); ++k) {
    const double w = spec.bin_edges[k + 1] - spec.bin_edges[k];
    const double mass = spec.bin_density[k] * w;
    if (u <= acc + mass || k + 1 == spec.bin_density.size()) {
      if (mass <= 0) continue;
      return spec.bin_edges[k] + (u - acc) / spec.bin_density[k];
    }
    acc += mass;
  }
  return spec.bin_edges.back();
}

std::vector<double> sample_potential(const LatticeBox& box,
                                     const DisorderSpec& spec) {
  spec.validate();
  std::vector<double> v(box.n_sites());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = potential_at(box.site(i), spec);
  return v;
}

}  // namespace spintunnel
