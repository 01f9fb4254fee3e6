#pragma once

// Counting checks on the cube graph G(M_r), whose vertices are the range-r
// cubes and whose edges join intersecting cubes. Two cubes of range r
// intersect iff their anchors are within Chebyshev distance r, so G(M_r) is
// Z^d with the "distance <= r" adjacency and every walk below runs on anchors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pscontour/configuration.hpp"
#include "pscontour/contour.hpp"
#include "pscontour/error.hpp"
#include "pscontour/lattice.hpp"
#include "pscontour/model.hpp"

namespace pscontour {

inline constexpr std::uint64_t kDefaultCensusBudget = std::uint64_t{1} << 32;

/// Number of cubes meeting a fixed cube, itself excluded. Counted by scanning
/// anchors around the cube and cross-checked against (2r+1)^d - 1.
inline std::size_t max_degree(int d, Coord r) {
  if (d < 1 || r < 1) throw InputError("max_degree: need d >= 1 and r >= 1");
  const Cube root{Site::origin(d), r};
  std::size_t count = 0;
  for (const auto& off : chebyshev_ball_offsets(d, 2 * r + 1))
    if (root.intersects(Cube{off, r})) ++count;
  std::size_t closed = 1;
  for (int k = 0; k < d; ++k) closed *= static_cast<std::size_t>(2 * r + 1);
  if (count != closed - 1)
    throw std::logic_error("max_degree: anchor scan disagrees with the closed form");
  return count;
}

/// Redelmeier's enumeration of the connected vertex sets containing a root in
/// Z^d with the "distance <= step" adjacency. Each set is produced exactly
/// once. The visitor sees the current set (root first) and returns whether
/// the set may be extended; refusing must be monotone (no superset of a
/// refused set would be accepted). Cells are indices into window().
class RootedSetEnumerator {
 public:
  RootedSetEnumerator(int d, Coord step, Coord radius, std::size_t max_size, std::uint64_t budget)
      : window_(Box::centered(d, 2 * radius + 1)), max_size_(max_size), budget_(budget) {
    for (const auto& o : chebyshev_ball_offsets(d, step)) steps_.push_back(o);
    seen_.assign(window_.size(), 0);
  }

  const Box& window() const noexcept { return window_; }
  std::uint64_t visits() const noexcept { return visits_; }

  template <class Visit>
  void run(Visit&& visit) {
    const auto root = window_.index_of(Site::origin(window_.dim()));
    std::fill(seen_.begin(), seen_.end(), 0);
    seen_[root] = 1;
    current_.clear();
    visits_ = 0;
    step(std::vector<std::size_t>{root}, visit);
  }

 private:
  template <class Visit>
  void step(std::vector<std::size_t> untried, Visit& visit) {
    while (!untried.empty()) {
      const auto v = untried.back();
      untried.pop_back();
      current_.push_back(v);
      if (++visits_ > budget_) throw CapacityError("rooted set enumeration", visits_, budget_);
      const bool extend = visit(std::span<const std::size_t>(current_));
      if (extend && current_.size() < max_size_) {
        std::vector<std::size_t> added;
        const Site x = window_.site_at(v);
        for (const auto& o : steps_) {
          const Site y = x + o;
          if (!window_.contains(y)) continue;
          const auto w = window_.index_of(y);
          if (!seen_[w]) {
            seen_[w] = 1;
            added.push_back(w);
          }
        }
        auto next = untried;
        next.insert(next.end(), added.begin(), added.end());
        step(std::move(next), visit);
        for (auto w : added) seen_[w] = 0;
      }
      current_.pop_back();
    }
  }

  Box window_;
  std::vector<Site> steps_;
  std::size_t max_size_;
  std::uint64_t budget_;
  std::uint64_t visits_ = 0;
  std::vector<std::uint8_t> seen_;
  std::vector<std::size_t> current_;
};

struct CensusRow {
  std::size_t n = 0;
  std::uint64_t count = 0;
  double bound = 0.0;
  double ratio = 0.0;
};

struct CensusReport {
  int d = 2;
  Coord r = 1;
  std::size_t k = 0;
  /// Anchors (or sites) scanned lie in this box around the root.
  Box window;
  std::vector<CensusRow> rows;
  bool passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const CensusRow& row) { return double(row.count) <= row.bound; });
  }
};

/// Connected subgraphs of G(M_r) on n vertices containing a fixed cube,
/// for n = 1..n_max, against (e k)^n.
inline CensusReport census_connected_subgraphs(int d, Coord r, std::size_t n_max,
                                               std::uint64_t budget = kDefaultCensusBudget) {
  if (n_max < 1) throw InputError("census: n_max must be at least 1");
  CensusReport rep;
  rep.d = d;
  rep.r = r;
  rep.k = max_degree(d, r);
  RootedSetEnumerator walker(d, r, static_cast<Coord>(n_max) * r, n_max, budget);
  rep.window = walker.window();
  std::vector<std::uint64_t> counts(n_max + 1, 0);
  walker.run([&](std::span<const std::size_t> cells) {
    ++counts[cells.size()];
    return true;
  });
  const double ek = std::numbers::e * static_cast<double>(rep.k);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double bound = std::pow(ek, static_cast<double>(n));
    rep.rows.push_back({n, counts[n], bound, static_cast<double>(counts[n]) / bound});
  }
  return rep;
}

inline std::uint64_t count_rooted_connected_subgraphs(int d, Coord r, std::size_t n,
                                                      std::uint64_t budget = kDefaultCensusBudget) {
  return census_connected_subgraphs(d, r, n, budget).rows.back().count;
}

/// Visitor for enumerated contours: marked interior (root included) and |imp|.
using ContourVisitor = std::function<void(std::span<const MarkedSite>, std::size_t)>;

/// Contours gamma with the root x in Int(gamma) and |imp gamma| = n, for
/// n = 1..n_max, under exterior spin `exterior`, against (1/2)(4 e k)^n.
///
/// Interiors are enumerated as distance-<=r-connected site sets containing x
/// with every mark assignment in {1..q} minus the exterior. The search is cut
/// with |imp gamma| >= 2 * (number of lines parallel to any axis meeting
/// Int gamma): along each such line the extreme interior sites each lie in an
/// improper cube reaching one step past them, and these cubes are distinct.
inline CensusReport census_contours(const Model& model, const Site& x, std::size_t n_max, Spin exterior = 1,
                                    std::uint64_t budget = kDefaultCensusBudget,
                                    const ContourVisitor& on_contour = {}) {
  model.require_certified("census_contours");
  if (x.dim() != model.d()) throw InputError("census: root dimension does not match the model");
  if (exterior < 1 || exterior > model.s()) throw InputError("census: exterior spin must lie in 1..s");
  if (n_max < 1) throw InputError("census: n_max must be at least 1");
  const int d = model.d();
  const Coord r = model.r();
  const auto half = static_cast<Coord>(n_max / 2);
  const Coord radius = std::max<Coord>(1, half) * r;
  std::size_t max_size = 1;
  for (int k = 0; k < d; ++k) max_size *= static_cast<std::size_t>(std::max<Coord>(1, half));

  CensusReport rep;
  rep.d = d;
  rep.r = r;
  rep.k = max_degree(d, r);
  RootedSetEnumerator walker(d, r, radius, max_size, budget);
  rep.window = walker.window();
  const Box& win = walker.window();

  // Spin buffer over the window padded by r, for cube patterns.
  const BoxFrame frame(win, r, model.q());
  std::vector<Spin> buffer(frame.padded_box().size(), exterior);
  std::vector<std::uint64_t> stamp(frame.cube_count(), 0);
  std::vector<std::uint64_t> in_set(win.size(), 0);
  std::uint64_t stamp_now = 0, set_now = 0;
  std::vector<std::uint64_t> counts(n_max + 1, 0);

  // Distinct-line counters per axis for the pruning bound.
  std::vector<std::vector<int>> line_hits(static_cast<std::size_t>(d), std::vector<int>(win.size(), 0));
  std::vector<std::size_t> lines(static_cast<std::size_t>(d), 0);
  auto line_id = [&](std::size_t cell, int axis) {
    Site s = win.site_at(cell);
    s[axis] = win.lower()[axis];
    return win.index_of(s);
  };
  std::vector<std::size_t> members;  // mirrors the walker's current set

  std::vector<Spin> marks_pool;
  for (Spin j = 1; j <= model.q(); ++j)
    if (j != exterior) marks_pool.push_back(j);
  std::vector<MarkedSite> gamma;

  auto imp_size = [&](std::span<const std::size_t> cells) {
    ++stamp_now;
    std::size_t improper = 0;
    for (auto v : cells)
      for (auto c : frame.cubes_of_site(v)) {
        if (stamp[c] == stamp_now) continue;
        stamp[c] = stamp_now;
        if (!model.proper(frame.cube_code(buffer, c))) ++improper;
      }
    return improper;
  };

  walker.run([&](std::span<const std::size_t> cells) {
    // keep line counters in sync with the walker's stack discipline
    while (members.size() >= cells.size()) {
      const auto gone = members.back();
      members.pop_back();
      for (int k = 0; k < d; ++k)
        if (--line_hits[static_cast<std::size_t>(k)][line_id(gone, k)] == 0) --lines[static_cast<std::size_t>(k)];
    }
    const auto added = cells.back();
    members.push_back(added);
    for (int k = 0; k < d; ++k)
      if (line_hits[static_cast<std::size_t>(k)][line_id(added, k)]++ == 0) ++lines[static_cast<std::size_t>(k)];
    const std::size_t widest = *std::max_element(lines.begin(), lines.end());
    if (2 * widest > n_max) return false;

    // Cubes meeting the interior but not inside it mix the exterior with a
    // mark, so they are improper whatever the marks; skip the mark loop when
    // those alone exceed n_max.
    ++set_now;
    for (auto v : cells) in_set[v] = set_now;
    std::size_t straddling = 0;
    ++stamp_now;
    for (auto v : cells)
      for (auto c : frame.cubes_of_site(v)) {
        if (stamp[c] == stamp_now) continue;
        stamp[c] = stamp_now;
        bool inside = true;
        for (auto p : frame.cube_sites(c)) {
          const auto b = frame.box_of_padded(p);
          inside = inside && b >= 0 && in_set[static_cast<std::size_t>(b)] == set_now;
        }
        straddling += !inside;
      }
    if (straddling > n_max) return true;

    // every mark assignment
    const std::size_t m = cells.size();
    std::vector<std::size_t> digit(m, 0);
    for (;;) {
      for (std::size_t t = 0; t < m; ++t) buffer[frame.padded_index(cells[t])] = marks_pool[digit[t]];
      const std::size_t size = imp_size(cells);
      if (size <= n_max) {
        ++counts[size];
        if (on_contour) {
          gamma.clear();
          for (std::size_t t = 0; t < m; ++t) gamma.push_back({x + win.site_at(cells[t]), marks_pool[digit[t]]});
          std::sort(gamma.begin(), gamma.end());
          on_contour(gamma, size);
        }
      }
      std::size_t t = 0;
      while (t < m && ++digit[t] == marks_pool.size()) digit[t++] = 0;
      if (t == m) break;
    }
    for (auto v : cells) buffer[frame.padded_index(v)] = exterior;
    return true;
  });

  const double four_ek = 4.0 * std::numbers::e * static_cast<double>(rep.k);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double bound = 0.5 * std::pow(four_ek, static_cast<double>(n));
    rep.rows.push_back({n, counts[n], bound, static_cast<double>(counts[n]) / bound});
  }
  return rep;
}

inline std::uint64_t count_rooted_contours(const Model& model, const Site& x, std::size_t n, Spin exterior = 1,
                                           std::uint64_t budget = kDefaultCensusBudget) {
  return census_contours(model, x, n, exterior, budget).rows.back().count;
}

struct ConnectorReport {
  std::size_t terminals = 0;
  /// Vertex count of the connected cube set found.
  std::size_t connector_size = 0;
  /// Exact minimum (Steiner search) or a constructive upper bound.
  bool exact = false;
  bool passes = false;
};

inline constexpr std::size_t kExactSteinerLimit = 8;

/// Size of a connected subgraph of G(M_r) containing imp(gamma), checked
/// against 2 |gamma|. Up to kExactSteinerLimit terminals the minimum is found
/// by Dreyfus-Wagner over the terminals' bounding box (clamping any
/// connector into that box keeps it connected, so the optimum lives there);
/// beyond that a greedy nearest-terminal connector only confirms the bound.
inline ConnectorReport verify_connector_bound(const Contour& gamma, Coord r) {
  ConnectorReport rep;
  const auto& terms = gamma.imp;
  rep.terminals = terms.size();
  if (terms.empty()) {
    rep.exact = true;
    rep.passes = true;
    return rep;
  }
  const int d = terms.front().anchor.dim();
  auto hops = [r](const Site& a, const Site& b) { return (chebyshev_distance(a, b) + r - 1) / r; };

  if (terms.size() <= kExactSteinerLimit) {
    Site lo = terms.front().anchor, hi = lo;
    for (const auto& t : terms)
      for (int k = 0; k < d; ++k) {
        lo[k] = std::min(lo[k], t.anchor[k]);
        hi[k] = std::max(hi[k], t.anchor[k]);
      }
    const auto verts = Box(lo, hi).sites();
    const std::size_t nv = verts.size();
    const std::size_t nt = terms.size();
    const std::size_t full = (std::size_t{1} << nt) - 1;
    constexpr int inf = std::numeric_limits<int>::max() / 4;
    std::vector<std::vector<int>> dist(nv, std::vector<int>(nv));
    for (std::size_t a = 0; a < nv; ++a)
      for (std::size_t b = 0; b < nv; ++b) dist[a][b] = hops(verts[a], verts[b]);
    // dp[S][v]: fewest edges in a tree spanning terminals S and vertex v
    std::vector<std::vector<int>> dp(full + 1, std::vector<int>(nv, inf));
    for (std::size_t t = 0; t < nt; ++t)
      for (std::size_t v = 0; v < nv; ++v) dp[std::size_t{1} << t][v] = hops(terms[t].anchor, verts[v]);
    for (std::size_t set = 1; set <= full; ++set) {
      if ((set & (set - 1)) == 0) continue;
      for (std::size_t v = 0; v < nv; ++v)
        for (std::size_t sub = (set - 1) & set; sub > 0; sub = (sub - 1) & set)
          dp[set][v] = std::min(dp[set][v], dp[sub][v] + dp[set ^ sub][v]);
      auto merged = dp[set];
      for (std::size_t v = 0; v < nv; ++v)
        for (std::size_t u = 0; u < nv; ++u) merged[v] = std::min(merged[v], dp[set][u] + dist[u][v]);
      dp[set] = std::move(merged);
    }
    const int edges = *std::min_element(dp[full].begin(), dp[full].end());
    rep.connector_size = static_cast<std::size_t>(edges) + 1;
    rep.exact = true;
  } else {
    std::vector<Site> tree{terms.front().anchor};
    std::vector<bool> joined(terms.size(), false);
    joined[0] = true;
    for (std::size_t round = 1; round < terms.size(); ++round) {
      std::size_t best_t = 0, best_u = 0;
      Coord best = std::numeric_limits<Coord>::max();
      for (std::size_t t = 0; t < terms.size(); ++t) {
        if (joined[t]) continue;
        for (std::size_t u = 0; u < tree.size(); ++u) {
          const Coord h = hops(tree[u], terms[t].anchor);
          if (h < best) {
            best = h;
            best_t = t;
            best_u = u;
          }
        }
      }
      joined[best_t] = true;
      Site cur = tree[best_u];
      const Site& goal = terms[best_t].anchor;
      while (cur != goal) {
        for (int k = 0; k < d; ++k) cur[k] += std::clamp(goal[k] - cur[k], -r, r);
        if (std::find(tree.begin(), tree.end(), cur) == tree.end()) tree.push_back(cur);
      }
    }
    rep.connector_size = tree.size();
  }
  rep.passes = rep.connector_size <= 2 * gamma.size();
  return rep;
}

}  // namespace pscontour
