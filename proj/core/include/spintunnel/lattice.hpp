#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spintunnel {

/// Integer lattice coordinate in Z^d.
using Coord = std::vector<int>;

int l1_norm(const Coord& x);
int linf_norm(const Coord& x);
int l1_dist(const Coord& a, const Coord& b);
int linf_dist(const Coord& a, const Coord& b);
std::string coord_to_string(const Coord& x);

/// A site on the doubled lattice Gamma: position plus spin in {+1,-1}.
struct SpinSite {
  Coord x;
  int spin = +1;  // +1 or -1
};

/// Distance on the glued double lattice: same-spin pairs are connected
/// directly, opposite-spin pairs only through the origin.
int graph_metric(const SpinSite& a, const SpinSite& b);

/// Finite l^inf box Lambda_L(u) = { x : |x-u|_inf <= L } with a fixed
/// lexicographic site enumeration.  Enumeration boxes are l^inf cubes;
/// all decay measurements elsewhere use the l^1 norm.
class LatticeBox {
 public:
  LatticeBox(int dim, Coord center, int radius);

  int dim() const { return dim_; }
  const Coord& center() const { return center_; }
  int radius() const { return radius_; }
  std::size_t n_sites() const { return n_sites_; }

  /// Site at enumeration index i (lexicographic over coordinates).
  Coord site(std::size_t i) const;
  /// Enumeration index of x; throws if x is outside the box.
  std::size_t index_of(const Coord& x) const;
  bool contains(const Coord& x) const;

  /// True iff the two boxes share no site.
  bool disjoint_from(const LatticeBox& other) const;
  /// True iff other is fully contained in this box.
  bool contains_box(const LatticeBox& other) const;

 private:
  int dim_;
  Coord center_;
  int radius_;
  std::size_t n_sites_;
};

}  // namespace spintunnel
