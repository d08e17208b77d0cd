#include "spintunnel/lattice.hpp"

#include <cmath>
#include <cstdlib>

namespace spintunnel {

int l1_norm(const Coord& x) {
  int s = 0;
  for (int c : x) s += std::abs(c);
  return s;
}

int linf_norm(const Coord& x) {
  int m = 0;
  for (int c : x) m = std::max(m, std::abs(c));
  return m;
}

static void check_same_dim(const Coord& a, const Coord& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("coordinate dimension mismatch: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
}

int l1_dist(const Coord& a, const Coord& b) {
  check_same_dim(a, b);
  int s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
  return s;
}

int linf_dist(const Coord& a, const Coord& b) {
  check_same_dim(a, b);
  int m = 0;
  for (std::size_t j = 0; j < a.size(); ++j)
    m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

std::string coord_to_string(const Coord& x) {
  std::string s = "(";
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j) s += ",";
    s += std::to_string(x[j]);
  }
  return s + ")";
}

int graph_metric(const SpinSite& a, const SpinSite& b) {
  check_same_dim(a.x, b.x);
  if (a.spin == b.spin) return l1_dist(a.x, b.x);
  return 1 + l1_norm(a.x) + l1_norm(b.x);
}

LatticeBox::LatticeBox(int dim, Coord center, int radius)
    : dim_(dim), center_(std::move(center)), radius_(radius) {
  if (dim_ < 1) throw std::invalid_argument("box dimension must be positive");
  if (radius_ < 0) throw std::invalid_argument("box radius must be nonnegative");
  if (static_cast<int>(center_.size()) != dim_)
    throw std::invalid_argument("box center has wrong dimension");
  const long side = 2L * radius_ + 1;
  long n = 1;
  for (int j = 0; j < dim_; ++j) {
    n *= side;
    if (n > (1L << 30)) throw std::invalid_argument("box too large");
  }
  n_sites_ = static_cast<std::size_t>(n);
}

Coord LatticeBox::site(std::size_t i) const {
  if (i >= n_sites_) throw std::out_of_range("site index out of range");
  const int side = 2 * radius_ + 1;
  Coord x(dim_);
  // lexicographic: last coordinate varies fastest
  for (int j = dim_ - 1; j >= 0; --j) {
    x[j] = center_[j] - radius_ + static_cast<int>(i % side);
    i /= side;
  }
  return x;
}

std::size_t LatticeBox::index_of(const Coord& x) const {
  check_same_dim(x, center_);
  const int side = 2 * radius_ + 1;
  std::size_t idx = 0;
  for (int j = 0; j < dim_; ++j) {
    const int off = x[j] - center_[j] + radius_;
    if (off < 0 || off >= side)
      throw std::out_of_range("site " + coord_to_string(x) + " outside box");
    idx = idx * side + static_cast<std::size_t>(off);
  }
  return idx;
}

bool LatticeBox::contains(const Coord& x) const {
  return linf_dist(x, center_) <= radius_;
}

bool LatticeBox::disjoint_from(const LatticeBox& other) const {
  check_same_dim(center_, other.center_);
  for (int j = 0; j < dim_; ++j)
    if (std::abs(center_[j] - other.center_[j]) > radius_ + other.radius_)
      return true;
  return false;
}

bool LatticeBox::contains_box(const LatticeBox& other) const {
  check_same_dim(center_, other.center_);
  for (int j = 0; j < dim_; ++j)
    if (std::abs(center_[j] - other.center_[j]) + other.radius_ > radius_)
      return false;
  return true;
}

}  // namespace spintunnel
