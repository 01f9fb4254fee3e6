#pragma once

// Configurations on a finite box with a constant exterior spin, and the
// precomputed incidence geometry (BoxFrame) that the enumeration and
// sampling kernels run on.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pscontour/error.hpp"
#include "pscontour/lattice.hpp"
#include "pscontour/model.hpp"

namespace pscontour {

/// Spins on `box` (row-major), extended by the constant `exterior` outside it.
struct Configuration {
  Box box;
  std::vector<Spin> spins;
  Spin exterior = 1;

  static Configuration constant(Box box, Spin value, Spin exterior) {
    Configuration c{box, std::vector<Spin>(box.size(), value), exterior};
    return c;
  }
  static Configuration uniform(Box box, Spin exterior) { return constant(std::move(box), exterior, exterior); }

  int dim() const { return box.dim(); }

  Spin at(const Site& x) const { return box.contains(x) ? spins[box.index_of(x)] : exterior; }
  void set(const Site& x, Spin v) {
    if (!box.contains(x)) throw InputError("site " + x.to_string() + " outside box " + box.to_string());
    spins[box.index_of(x)] = v;
  }

  /// Sites of the box whose spin differs from the exterior.
  std::vector<Site> deviating_sites() const {
    std::vector<Site> out;
    for (std::size_t i = 0; i < spins.size(); ++i)
      if (spins[i] != exterior) out.push_back(box.site_at(i));
    return out;
  }

  void validate(const ModelSpec& m) const {
    if (box.dim() != m.d)
      throw InputError("configuration dimension " + std::to_string(box.dim()) + " does not match model dimension " +
                       std::to_string(m.d));
    if (spins.size() != box.size()) throw InputError("configuration spin count does not match box size");
    for (Spin v : spins)
      if (v < 1 || v > m.q) throw InputError("spin value " + std::to_string(v) + " outside 1..q");
    if (exterior < 1 || exterior > m.s) throw InputError("exterior spin must lie in 1..s");
  }

  bool operator==(const Configuration&) const = default;
};

/// Incidence tables for a box and range r. Cubes are the members of C(box),
/// anchored in [lower - r, upper]; their sites live in the padded box
/// [lower - r, upper + r].
class BoxFrame {
 public:
  BoxFrame(Box box, Coord r, int q)
      : box_(std::move(box)),
        r_(r),
        q_(q),
        padded_(box_.padded(r, r)),
        cube_box_(box_.padded(r, 0)),
        offsets_(cube_offsets(box_.dim(), r)),
        codec_(q, offsets_.size()) {
    const std::size_t n = box_.size();
    const std::size_t p_len = offsets_.size();
    box_to_padded_.resize(n);
    padded_to_box_.assign(padded_.size(), -1);
    for (std::size_t i = 0; i < n; ++i) {
      box_to_padded_[i] = padded_.index_of(box_.site_at(i));
      padded_to_box_[box_to_padded_[i]] = static_cast<std::ptrdiff_t>(i);
    }

    const std::size_t nc = cube_box_.size();
    cube_sites_.resize(nc * p_len);
    for (std::size_t c = 0; c < nc; ++c) {
      const Site a = cube_box_.site_at(c);
      for (std::size_t p = 0; p < p_len; ++p) cube_sites_[c * p_len + p] = padded_.index_of(a + offsets_[p]);
    }
    site_cube_.resize(n * p_len);
    for (std::size_t i = 0; i < n; ++i) {
      const Site x = box_.site_at(i);
      for (std::size_t p = 0; p < p_len; ++p) {
        site_cube_[i * p_len + p] = cube_box_.index_of(x - offsets_[p]);
      }
    }
    near_.resize(n);
    touch_.resize(n);
    const auto ball_r = chebyshev_ball_offsets(box_.dim(), r);
    for (std::size_t i = 0; i < n; ++i) {
      const Site x = box_.site_at(i);
      for (const auto& v : ball_r) {
        const Site y = x + v;
        if (!box_.contains(y)) continue;
        const auto j = static_cast<std::uint32_t>(box_.index_of(y));
        near_[i].push_back(j);
        if (chebyshev_distance(x, y) == 1) touch_[i].push_back(j);
      }
    }
  }

  const Box& box() const noexcept { return box_; }
  const Box& padded_box() const noexcept { return padded_; }
  Coord r() const noexcept { return r_; }
  int q() const noexcept { return q_; }
  std::size_t site_count() const noexcept { return box_.size(); }
  std::size_t cube_count() const noexcept { return cube_box_.size(); }
  std::size_t cube_volume() const noexcept { return offsets_.size(); }
  const PatternCodec& codec() const noexcept { return codec_; }

  Cube cube(std::size_t c) const { return Cube{cube_box_.site_at(c), r_}; }
  std::size_t cube_index(const Cube& b) const { return cube_box_.index_of(b.anchor); }
  bool has_cube(const Cube& b) const { return b.range == r_ && cube_box_.contains(b.anchor); }
  std::size_t padded_index(std::size_t box_index) const { return box_to_padded_[box_index]; }
  /// Box index of a padded-buffer position, or -1 outside the box.
  std::ptrdiff_t box_of_padded(std::size_t p) const { return padded_to_box_[p]; }

  /// Padded-buffer indices of the sites of cube c, in pattern order.
  std::span<const std::size_t> cube_sites(std::size_t c) const {
    return {cube_sites_.data() + c * offsets_.size(), offsets_.size()};
  }
  /// Cubes containing box site i; site i sits at pattern position m of the
  /// m-th cube listed.
  std::span<const std::size_t> cubes_of_site(std::size_t i) const {
    return {site_cube_.data() + i * offsets_.size(), offsets_.size()};
  }
  /// Box sites at Chebyshev distance 1..r (near) and exactly 1 (touch).
  std::span<const std::uint32_t> near(std::size_t i) const { return near_[i]; }
  std::span<const std::uint32_t> touch(std::size_t i) const { return touch_[i]; }

  /// Padded buffer: the exterior everywhere, then the box spins.
  std::vector<Spin> make_buffer(const Configuration& c) const {
    std::vector<Spin> buf(padded_.size(), c.exterior);
    for (std::size_t i = 0; i < c.spins.size(); ++i) buf[box_to_padded_[i]] = c.spins[i];
    return buf;
  }

  std::uint64_t cube_code(std::span<const Spin> buffer, std::size_t c) const {
    std::uint64_t code = 0;
    const auto sites = cube_sites(c);
    for (std::size_t p = 0; p < sites.size(); ++p)
      code += static_cast<std::uint64_t>(buffer[sites[p]] - 1) * codec_.weight(p);
    return code;
  }

  void check_compatible(const Configuration& c) const {
    if (!(c.box == box_)) throw InputError("configuration box does not match frame");
  }

 private:
  Box box_;
  Coord r_;
  int q_;
  Box padded_;
  Box cube_box_;
  std::vector<Site> offsets_;
  PatternCodec codec_;
  std::vector<std::size_t> box_to_padded_;
  std::vector<std::ptrdiff_t> padded_to_box_;
  std::vector<std::size_t> cube_sites_;
  std::vector<std::size_t> site_cube_;
  std::vector<std::vector<std::uint32_t>> near_;
  std::vector<std::vector<std::uint32_t>> touch_;
};

}  // namespace pscontour
