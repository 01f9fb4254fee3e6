#pragma once

// Geometry of Z^d under the Chebyshev (max) metric: sites, boxes and the
// family of range-r cubes, each the translate of {0,...,r}^d.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pscontour/error.hpp"

namespace pscontour {

using Coord = std::int32_t;

/// A point of Z^d.
class Site {
 public:
  Site() = default;
  explicit Site(std::vector<Coord> coords) : coords_(std::move(coords)) {}
  Site(std::initializer_list<Coord> coords) : coords_(coords) {}

  static Site origin(int d) { return Site(std::vector<Coord>(static_cast<std::size_t>(d), 0)); }

  int dim() const noexcept { return static_cast<int>(coords_.size()); }
  Coord operator[](int k) const { return coords_[static_cast<std::size_t>(k)]; }
  Coord& operator[](int k) { return coords_[static_cast<std::size_t>(k)]; }
  std::span<const Coord> coords() const noexcept { return coords_; }

  Site operator+(const Site& o) const {
    Site out = *this;
    for (int k = 0; k < dim(); ++k) out[k] += o[k];
    return out;
  }
  Site operator-(const Site& o) const {
    Site out = *this;
    for (int k = 0; k < dim(); ++k) out[k] -= o[k];
    return out;
  }

  auto operator<=>(const Site&) const = default;
  bool operator==(const Site&) const = default;

  std::string to_string() const {
    std::string s = "(";
    for (int k = 0; k < dim(); ++k) {
      if (k) s += ',';
      s += std::to_string(coords_[static_cast<std::size_t>(k)]);
    }
    return s + ")";
  }

 private:
  std::vector<Coord> coords_;
};

inline void require_same_dim(const Site& x, const Site& y) {
  if (x.dim() != y.dim())
    throw InputError("dimension mismatch: " + x.to_string() + " vs " + y.to_string());
}

inline Coord chebyshev_distance(const Site& x, const Site& y) {
  require_same_dim(x, y);
  Coord best = 0;
  for (int k = 0; k < x.dim(); ++k) best = std::max(best, static_cast<Coord>(std::abs(x[k] - y[k])));
  return best;
}

/// Minimum pairwise Chebyshev distance between two nonempty site sets.
inline Coord set_distance(std::span<const Site> a, std::span<const Site> b) {
  if (a.empty() || b.empty()) throw InputError("set_distance of an empty set");
  Coord best = chebyshev_distance(a.front(), b.front());
  for (const auto& x : a)
    for (const auto& y : b) best = std::min(best, chebyshev_distance(x, y));
  return best;
}

/// Largest pairwise Chebyshev distance; 0 for sets with fewer than two sites.
inline Coord diameter(std::span<const Site> a) {
  Coord best = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) best = std::max(best, chebyshev_distance(a[i], a[j]));
  return best;
}

/// Inclusive axis-aligned box [lower_k, upper_k] on every axis.
class Box {
 public:
  Box() = default;
  Box(Site lower, Site upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    require_same_dim(lower_, upper_);
    for (int k = 0; k < lower_.dim(); ++k)
      if (lower_[k] > upper_[k]) throw InputError("box with lower > upper on axis " + std::to_string(k));
  }

  /// Box of side `side` on every axis containing the origin, lower corner at -((side-1)/2).
  static Box centered(int d, Coord side) {
    if (side < 1) throw InputError("box side must be positive");
    Site lo = Site::origin(d), hi = Site::origin(d);
    for (int k = 0; k < d; ++k) {
      lo[k] = -((side - 1) / 2);
      hi[k] = lo[k] + side - 1;
    }
    return Box(lo, hi);
  }

  /// Per-axis sides, each axis placed as in centered(d, side).
  static Box centered(std::span<const Coord> sides) {
    Site lo(std::vector<Coord>(sides.size(), 0)), hi(std::vector<Coord>(sides.size(), 0));
    for (std::size_t k = 0; k < sides.size(); ++k) {
      if (sides[k] < 1) throw InputError("box side must be positive");
      lo[static_cast<int>(k)] = -((sides[k] - 1) / 2);
      hi[static_cast<int>(k)] = lo[static_cast<int>(k)] + sides[k] - 1;
    }
    return Box(lo, hi);
  }

  /// Box with the given side lengths and lower corner at the origin.
  static Box from_extents(std::span<const Coord> sides) {
    Site lo(std::vector<Coord>(sides.size(), 0)), hi(std::vector<Coord>(sides.size(), 0));
    for (std::size_t k = 0; k < sides.size(); ++k) {
      if (sides[k] < 1) throw InputError("box side must be positive");
      hi[static_cast<int>(k)] = sides[k] - 1;
    }
    return Box(lo, hi);
  }

  int dim() const noexcept { return lower_.dim(); }
  const Site& lower() const noexcept { return lower_; }
  const Site& upper() const noexcept { return upper_; }
  Coord extent(int k) const { return upper_[k] - lower_[k] + 1; }

  std::size_t size() const {
    std::size_t n = 1;
    for (int k = 0; k < dim(); ++k) n *= static_cast<std::size_t>(extent(k));
    return n;
  }

  bool contains(const Site& x) const {
    if (x.dim() != dim()) return false;
    for (int k = 0; k < dim(); ++k)
      if (x[k] < lower_[k] || x[k] > upper_[k]) return false;
    return true;
  }

  bool contains(const Box& b) const { return contains(b.lower_) && contains(b.upper_); }

  /// Row-major position: the first axis varies slowest.
  std::size_t index_of(const Site& x) const {
    std::size_t idx = 0;
    for (int k = 0; k < dim(); ++k)
      idx = idx * static_cast<std::size_t>(extent(k)) + static_cast<std::size_t>(x[k] - lower_[k]);
    return idx;
  }

  Site site_at(std::size_t idx) const {
    Site x = lower_;
    for (int k = dim() - 1; k >= 0; --k) {
      auto e = static_cast<std::size_t>(extent(k));
      x[k] = lower_[k] + static_cast<Coord>(idx % e);
      idx /= e;
    }
    return x;
  }

  std::vector<Site> sites() const {
    std::vector<Site> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(site_at(i));
    return out;
  }

  /// The box grown by `lo_pad` below and `hi_pad` above on every axis.
  Box padded(Coord lo_pad, Coord hi_pad) const {
    Site lo = lower_, hi = upper_;
    for (int k = 0; k < dim(); ++k) {
      lo[k] -= lo_pad;
      hi[k] += hi_pad;
    }
    return Box(lo, hi);
  }

  bool operator==(const Box&) const = default;

  std::string to_string() const { return lower_.to_string() + ".." + upper_.to_string(); }

 private:
  Site lower_;
  Site upper_;
};

/// The cube anchor + {0,...,range}^d.
struct Cube {
  Site anchor;
  Coord range = 1;

  bool contains(const Site& x) const {
    for (int k = 0; k < anchor.dim(); ++k)
      if (x[k] < anchor[k] || x[k] > anchor[k] + range) return false;
    return true;
  }
  bool intersects(const Cube& o) const {
    for (int k = 0; k < anchor.dim(); ++k)
      if (anchor[k] > o.anchor[k] + o.range || o.anchor[k] > anchor[k] + range) return false;
    return true;
  }
  Box as_box() const {
    Site hi = anchor;
    for (int k = 0; k < anchor.dim(); ++k) hi[k] += range;
    return Box(anchor, hi);
  }

  auto operator<=>(const Cube&) const = default;
  bool operator==(const Cube&) const = default;
};

/// Offsets {0,...,r}^d in row-major order; position p in this list is the
/// p-th entry of a cube pattern.
inline std::vector<Site> cube_offsets(int d, Coord r) {
  Site hi = Site::origin(d);
  for (int k = 0; k < d; ++k) hi[k] = r;
  return Box(Site::origin(d), hi).sites();
}

/// Number of sites of a range-r cube in dimension d.
inline std::size_t cube_volume(int d, Coord r) {
  std::size_t n = 1;
  for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(r + 1);
  return n;
}

/// All cubes of range r that meet the set `a`, sorted by anchor.
inline std::vector<Cube> cubes_meeting(std::span<const Site> a, Coord r) {
  if (a.empty()) throw InputError("cubes_meeting: empty site set");
  const int d = a.front().dim();
  const auto window = cube_offsets(d, r);
  std::vector<Cube> out;
  out.reserve(a.size() * window.size());
  for (const auto& x : a) {
    require_same_dim(x, a.front());
    for (const auto& off : window) out.push_back(Cube{x - off, r});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// n(A): the number of range-r cubes containing every site of `a`.
/// Zero when diam(A) > r.
inline std::uint64_t containing_cube_count(std::span<const Site> a, Coord r) {
  if (a.empty()) throw InputError("containing_cube_count: empty site set");
  std::uint64_t n = 1;
  for (int k = 0; k < a.front().dim(); ++k) {
    Coord lo = a.front()[k], hi = a.front()[k];
    for (const auto& x : a) {
      require_same_dim(x, a.front());
      lo = std::min(lo, x[k]);
      hi = std::max(hi, x[k]);
    }
    const Coord span = hi - lo;
    if (span > r) return 0;
    n *= static_cast<std::uint64_t>(r + 1 - span);
  }
  return n;
}

/// Offsets v != 0 with max_k |v_k| <= radius, row-major.
inline std::vector<Site> chebyshev_ball_offsets(int d, Coord radius) {
  Site lo = Site::origin(d), hi = Site::origin(d);
  for (int k = 0; k < d; ++k) {
    lo[k] = -radius;
    hi[k] = radius;
  }
  std::vector<Site> out;
  for (auto& v : Box(lo, hi).sites())
    if (v != Site::origin(d)) out.push_back(std::move(v));
  return out;
}

}  // namespace pscontour
