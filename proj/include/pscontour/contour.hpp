#pragma once

// Boundaries, subcontours and contours of a configuration with constant
// exterior spin i.
//
// A subcontour is a maximal set of box sites carrying the same spin j != i
// that is connected under Chebyshev distance 1; j is its mark. Subcontours
// whose interiors come within distance r of each other are adjacent, and a
// contour is a connected component of that adjacency. Equivalently, contour
// interiors are the components of the deviating-site set under the
// "distance <= r" relation, which is how ContourScanner computes them.
//
// imp(gamma) is the set of improper cubes meeting Int(gamma) and |gamma| is
// its size. Distinct contours are more than r apart, so no cube meets two of
// them and the boundary is the disjoint union of the imp sets.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pscontour/configuration.hpp"
#include "pscontour/error.hpp"
#include "pscontour/lattice.hpp"
#include "pscontour/model.hpp"

namespace pscontour {

struct MarkedSite {
  Site site;
  Spin mark = 1;
  auto operator<=>(const MarkedSite&) const = default;
  bool operator==(const MarkedSite&) const = default;
};

struct Boundary {
  std::vector<Cube> improper_cubes;
  std::size_t size() const noexcept { return improper_cubes.size(); }
  bool empty() const noexcept { return improper_cubes.empty(); }
};

struct Subcontour {
  std::vector<Site> interior;  // sorted
  Spin mark = 1;
  bool operator==(const Subcontour&) const = default;
};

struct Contour {
  std::vector<Subcontour> subcontours;  // ordered by least interior site
  std::vector<Site> interior;           // Int(gamma), sorted
  std::vector<Cube> imp;                // sorted by anchor

  std::size_t size() const noexcept { return imp.size(); }

  /// Int(gamma) with marks, sorted by site. Two contours are the same
  /// contour exactly when these lists agree.
  std::vector<MarkedSite> marked_sites() const {
    std::vector<MarkedSite> out;
    for (const auto& t : subcontours)
      for (const auto& x : t.interior) out.push_back({x, t.mark});
    std::sort(out.begin(), out.end());
    return out;
  }

  bool operator==(const Contour& o) const { return marked_sites() == o.marked_sites(); }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (const auto& ms : marked_sites()) {
      if (!first) s += ' ';
      first = false;
      s += ms.site.to_string() + ":" + std::to_string(ms.mark);
    }
    return s + "}";
  }
};

/// Index-level contour decomposition over a BoxFrame. Reusable across
/// configurations of the same frame; not thread-safe (one per worker).
class ContourScanner {
 public:
  struct Component {
    std::vector<std::uint32_t> sites;  // box indices, sorted
    std::vector<std::uint32_t> imp;    // cube indices, sorted
  };

  ContourScanner(const BoxFrame& frame, const Model& model)
      : frame_(&frame),
        model_(&model),
        label_(frame.site_count(), -1),
        cube_stamp_(frame.cube_count(), 0) {}

  /// Decomposes the configuration given by its box spins and padded buffer.
  /// Components come out ordered by least site index.
  void scan(std::span<const Spin> spins, std::span<const Spin> buffer, Spin exterior) {
    components_.clear();
    boundary_size_ = 0;
    const std::size_t n = spins.size();
    std::fill(label_.begin(), label_.end(), -1);
    for (std::size_t start = 0; start < n; ++start) {
      if (spins[start] == exterior || label_[start] >= 0) continue;
      const auto id = static_cast<int>(components_.size());
      components_.emplace_back();
      auto& comp = components_.back();
      stack_.assign(1, static_cast<std::uint32_t>(start));
      label_[start] = id;
      while (!stack_.empty()) {
        const auto v = stack_.back();
        stack_.pop_back();
        comp.sites.push_back(v);
        for (auto w : frame_->near(v))
          if (label_[w] < 0 && spins[w] != exterior) {
            label_[w] = id;
            stack_.push_back(w);
          }
      }
      std::sort(comp.sites.begin(), comp.sites.end());
      ++stamp_;
      for (auto v : comp.sites)
        for (auto c : frame_->cubes_of_site(v)) {
          if (cube_stamp_[c] == stamp_) continue;
          cube_stamp_[c] = stamp_;
          if (!model_->proper(frame_->cube_code(buffer, c))) comp.imp.push_back(static_cast<std::uint32_t>(c));
        }
      std::sort(comp.imp.begin(), comp.imp.end());
      boundary_size_ += comp.imp.size();
    }
  }

  const std::vector<Component>& components() const noexcept { return components_; }
  std::size_t boundary_size() const noexcept { return boundary_size_; }
  /// Component id of box site i, or -1 when the site carries the exterior spin.
  int label(std::size_t i) const { return label_[i]; }

  /// Hash key of a component: site index * q + (mark - 1), ascending.
  void key(const Component& comp, std::span<const Spin> spins, std::vector<std::uint32_t>& out) const {
    out.clear();
    const auto q = static_cast<std::uint32_t>(frame_->q());
    for (auto v : comp.sites) out.push_back(v * q + static_cast<std::uint32_t>(spins[v] - 1));
  }

  /// Converts a component into a Contour with site coordinates.
  Contour to_contour(const Component& comp, std::span<const Spin> spins) const {
    Contour g;
    const auto& box = frame_->box();
    for (auto v : comp.sites) g.interior.push_back(box.site_at(v));
    for (auto c : comp.imp) g.imp.push_back(frame_->cube(c));
    // split into subcontours: distance-1 components of equal mark
    std::map<std::uint32_t, int> sub_of;
    for (auto v : comp.sites) {
      if (sub_of.count(v)) continue;
      const auto id = static_cast<int>(g.subcontours.size());
      g.subcontours.push_back({{}, spins[v]});
      std::vector<std::uint32_t> st{v};
      sub_of[v] = id;
      while (!st.empty()) {
        const auto a = st.back();
        st.pop_back();
        g.subcontours[static_cast<std::size_t>(id)].interior.push_back(box.site_at(a));
        for (auto b : frame_->touch(a))
          if (spins[b] == spins[v] && label_[b] == label_[v] && !sub_of.count(b)) {
            sub_of[b] = id;
            st.push_back(b);
          }
      }
      std::sort(g.subcontours.back().interior.begin(), g.subcontours.back().interior.end());
    }
    return g;
  }

 private:
  const BoxFrame* frame_;
  const Model* model_;
  std::vector<int> label_;
  std::vector<std::uint32_t> stack_;
  std::vector<std::uint64_t> cube_stamp_;
  std::uint64_t stamp_ = 0;
  std::vector<Component> components_;
  std::size_t boundary_size_ = 0;
};

/// Improper cubes of the configuration: those in C(box) whose pattern is not
/// a constant in 1..s.
inline Boundary boundary(const Configuration& config, const Model& model) {
  model.require_certified("boundary");
  config.validate(model.spec());
  const BoxFrame frame(config.box, model.r(), model.q());
  const auto buf = frame.make_buffer(config);
  Boundary out;
  for (std::size_t c = 0; c < frame.cube_count(); ++c)
    if (!model.proper(frame.cube_code(buf, c))) out.improper_cubes.push_back(frame.cube(c));
  return out;
}

/// Maximal distance-1-connected same-spin sets of deviating sites, ordered
/// by least site.
inline std::vector<Subcontour> subcontours(const Configuration& config) {
  const Box& box = config.box;
  const auto ones = chebyshev_ball_offsets(box.dim(), 1);
  std::vector<int> seen(config.spins.size(), 0);
  std::vector<Subcontour> out;
  for (std::size_t start = 0; start < config.spins.size(); ++start) {
    const Spin mark = config.spins[start];
    if (mark == config.exterior || seen[start]) continue;
    Subcontour t{{}, mark};
    std::vector<std::size_t> st{start};
    seen[start] = 1;
    while (!st.empty()) {
      const auto v = st.back();
      st.pop_back();
      const Site x = box.site_at(v);
      t.interior.push_back(x);
      for (const auto& o : ones) {
        const Site y = x + o;
        if (!box.contains(y)) continue;
        const auto w = box.index_of(y);
        if (!seen[w] && config.spins[w] == mark) {
          seen[w] = 1;
          st.push_back(w);
        }
      }
    }
    std::sort(t.interior.begin(), t.interior.end());
    out.push_back(std::move(t));
  }
  return out;
}

/// The contours of the configuration, ordered by least interior site.
inline std::vector<Contour> contours(const Configuration& config, const Model& model) {
  model.require_certified("contours");
  config.validate(model.spec());
  const BoxFrame frame(config.box, model.r(), model.q());
  const auto buf = frame.make_buffer(config);
  ContourScanner scanner(frame, model);
  scanner.scan(config.spins, buf, config.exterior);
  std::vector<Contour> out;
  for (const auto& comp : scanner.components()) out.push_back(scanner.to_contour(comp, config.spins));
  return out;
}

/// imp(gamma) computed from the marked interior alone: every other site
/// within the cubes that meet Int(gamma) carries the exterior spin.
inline std::vector<Cube> imp_of(std::span<const MarkedSite> gamma, Spin exterior, const Model& model) {
  model.require_certified("imp_of");
  if (gamma.empty()) return {};
  std::map<Site, Spin> marks;
  std::vector<Site> sites;
  for (const auto& ms : gamma) {
    marks[ms.site] = ms.mark;
    sites.push_back(ms.site);
  }
  const auto offsets = cube_offsets(model.d(), model.r());
  const auto& codec = model.potential().codec();
  std::vector<Cube> out;
  std::vector<Spin> pattern(offsets.size());
  for (const auto& b : cubes_meeting(sites, model.r())) {
    for (std::size_t p = 0; p < offsets.size(); ++p) {
      auto it = marks.find(b.anchor + offsets[p]);
      pattern[p] = it == marks.end() ? exterior : it->second;
    }
    if (!model.proper(codec.encode(pattern))) out.push_back(b);
  }
  return out;
}

/// chi_gamma: resets Int(gamma) to the exterior spin. The contour must be
/// one of the configuration's contours.
inline Configuration remove_contour(const Configuration& config, const Contour& gamma, const Model& model) {
  const auto all = contours(config, model);
  if (std::find(all.begin(), all.end(), gamma) == all.end())
    throw InputError("remove_contour: " + gamma.to_string() + " is not a contour of the configuration");
  Configuration out = config;
  for (const auto& x : gamma.interior) out.set(x, config.exterior);
  return out;
}

/// Whether gamma is a contour of the configuration, decided locally: the
/// marks agree on Int(gamma) and every other site within distance r of
/// Int(gamma) carries the exterior spin.
inline bool has_contour_locally(const Configuration& config, std::span<const MarkedSite> gamma, Coord r) {
  std::set<Site> interior;
  for (const auto& ms : gamma) {
    if (config.at(ms.site) != ms.mark || ms.mark == config.exterior) return false;
    interior.insert(ms.site);
  }
  const auto ball = chebyshev_ball_offsets(config.dim(), r);
  for (const auto& ms : gamma)
    for (const auto& o : ball) {
      const Site y = ms.site + o;
      if (!interior.count(y) && config.at(y) != config.exterior) return false;
    }
  // Int(gamma) must itself be connected under distance <= r.
  if (gamma.empty()) return false;
  std::set<Site> reached{gamma.front().site};
  std::vector<Site> st{gamma.front().site};
  while (!st.empty()) {
    const Site x = st.back();
    st.pop_back();
    for (const auto& o : ball) {
      const Site y = x + o;
      if (interior.count(y) && !reached.count(y)) {
        reached.insert(y);
        st.push_back(y);
      }
    }
  }
  return reached.size() == interior.size();
}

}  // namespace pscontour
