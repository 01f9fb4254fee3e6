#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "pscontour/census.hpp"
#include "pscontour/contour.hpp"

using namespace pscontour;

namespace {

using SiteSet = std::set<Site>;

// Naive growth: every rooted connected set of size n+1 is a rooted connected
// set of size n plus one neighbor. Deduplicated with std::set.
std::vector<std::set<SiteSet>> grow_rooted(int d, Coord step, std::size_t n_max) {
  std::vector<std::set<SiteSet>> levels(n_max + 1);
  levels[1].insert(SiteSet{Site::origin(d)});
  const auto ball = chebyshev_ball_offsets(d, step);
  for (std::size_t n = 1; n < n_max; ++n)
    for (const auto& s : levels[n])
      for (const auto& x : s)
        for (const auto& o : ball) {
          const Site y = x + o;
          if (s.count(y)) continue;
          auto t = s;
          t.insert(y);
          levels[n + 1].insert(std::move(t));
        }
  return levels;
}

}  // namespace

TEST(Census, MaxDegree) {
  EXPECT_EQ(max_degree(2, 1), 8u);
  EXPECT_EQ(max_degree(3, 1), 26u);
  EXPECT_EQ(max_degree(2, 2), 24u);
}

TEST(Census, RootedSubgraphsMatchNaiveGrowth) {
  // cubes b, b' meet iff their anchors are within Chebyshev distance r
  for (Coord r : {1, 2}) {
    const std::size_t n_max = r == 1 ? 5 : 4;
    const auto levels = grow_rooted(2, r, n_max);
    const auto rep = census_connected_subgraphs(2, r, n_max);
    ASSERT_EQ(rep.rows.size(), n_max);
    EXPECT_TRUE(rep.passed());
    for (std::size_t n = 1; n <= n_max; ++n) {
      EXPECT_EQ(rep.rows[n - 1].count, levels[n].size()) << "r=" << r << " n=" << n;
      EXPECT_DOUBLE_EQ(rep.rows[n - 1].bound, std::pow(std::numbers::e * rep.k, double(n)));
    }
  }
  EXPECT_EQ(count_rooted_connected_subgraphs(2, 1, 1), 1u);
  EXPECT_EQ(count_rooted_connected_subgraphs(2, 1, 2), 8u);
  EXPECT_EQ(count_rooted_connected_subgraphs(2, 1, 3), 60u);
  EXPECT_EQ(count_rooted_connected_subgraphs(3, 1, 2), 26u);
}

TEST(Census, GrowthIsMonotone) {
  const auto rep = census_connected_subgraphs(2, 1, 5);
  for (std::size_t k = 1; k < rep.rows.size(); ++k) EXPECT_GE(rep.rows[k].count, rep.rows[k - 1].count);
}

TEST(Census, BudgetIsEnforced) {
  EXPECT_THROW(census_connected_subgraphs(2, 1, 6, 1000), CapacityError);
}

TEST(Census, ContoursMatchNaiveOracle) {
  for (int q : {2, 3}) {
    const Model model(builtin::potts(2, 1, q));
    const std::size_t n_max = 7;
    // Interiors of 4 or more sites already cost more than 7 cubes; the
    // oracle grows one or two sizes past that and checks it.
    const std::size_t m_max = q == 2 ? 5 : 4;
    const auto levels = grow_rooted(2, 1, m_max);
    std::vector<std::uint64_t> want(n_max + 1, 0);
    const Box box = Box::centered(2, 11);
    for (std::size_t m = 1; m <= m_max; ++m)
      for (const auto& s : levels[m]) {
        std::vector<Site> sites(s.begin(), s.end());
        std::size_t assignments = 1;
        for (std::size_t t = 0; t < m; ++t) assignments *= static_cast<std::size_t>(q - 1);
        for (std::size_t a = 0; a < assignments; ++a) {
          auto c = Configuration::uniform(box, 1);
          auto code = a;
          for (const auto& x : sites) {
            c.set(x, static_cast<Spin>(2 + code % static_cast<std::size_t>(q - 1)));
            code /= static_cast<std::size_t>(q - 1);
          }
          const auto gs = contours(c, model);
          ASSERT_EQ(gs.size(), 1u);
          if (m >= 4) {
            EXPECT_GT(gs[0].size(), n_max);
          }
          if (gs[0].size() <= n_max) ++want[gs[0].size()];
        }
      }
    const auto rep = census_contours(model, Site::origin(2), n_max);
    EXPECT_TRUE(rep.passed());
    for (std::size_t n = 1; n <= n_max; ++n) EXPECT_EQ(rep.rows[n - 1].count, want[n]) << "q=" << q << " n=" << n;
    EXPECT_EQ(rep.rows[3].count, static_cast<std::uint64_t>(q - 1));
    EXPECT_EQ(rep.rows[0].count + rep.rows[1].count + rep.rows[2].count, 0u);
  }
}

TEST(Census, ContourRoundTrip) {
  const Model model(builtin::potts(2, 1, 3));
  const Box box = Box::centered(2, 11);
  std::size_t seen = 0, mismatches = 0;
  census_contours(model, Site::origin(2), 8, 1, kDefaultCensusBudget,
                  [&](std::span<const MarkedSite> gamma, std::size_t size) {
                    auto c = Configuration::uniform(box, 1);
                    for (const auto& ms : gamma) c.set(ms.site, ms.mark);
                    const auto gs = contours(c, model);
                    const std::vector<MarkedSite> want(gamma.begin(), gamma.end());
                    if (gs.size() != 1 || gs[0].marked_sites() != want || gs[0].size() != size) ++mismatches;
                    ++seen;
                  });
  EXPECT_GT(seen, 0u);
  EXPECT_EQ(mismatches, 0u);
}

TEST(Census, RootIndependence) {
  const Model model(builtin::ising());
  const auto a = census_contours(model, Site::origin(2), 8);
  const auto b = census_contours(model, Site{5, -3}, 8);
  for (std::size_t k = 0; k < a.rows.size(); ++k) EXPECT_EQ(a.rows[k].count, b.rows[k].count);
}

TEST(Connector, SingleFlipAndPairs) {
  const Model model(builtin::potts(2, 1, 3));
  auto c = Configuration::uniform(Box::centered(2, 7), 1);
  c.set({0, 0}, 2);
  auto rep = verify_connector_bound(contours(c, model).front(), 1);
  EXPECT_TRUE(rep.exact);
  EXPECT_TRUE(rep.passes);
  EXPECT_EQ(rep.connector_size, 4u);

  c.set({1, 1}, 3);  // second subcontour at distance r
  const auto gamma = contours(c, model).front();
  ASSERT_EQ(gamma.subcontours.size(), 2u);
  rep = verify_connector_bound(gamma, 1);
  EXPECT_EQ(rep.terminals, 7u);
  EXPECT_TRUE(rep.exact);
  EXPECT_EQ(rep.connector_size, 7u);  // imp is already connected
  EXPECT_TRUE(rep.passes);
}

TEST(Connector, ConstructiveModeForLargeContours) {
  const Model model(builtin::ising());
  auto c = Configuration::uniform(Box::centered(2, 7), 1);
  c.set({0, 0}, 2);
  c.set({0, 1}, 2);
  c.set({0, 2}, 2);
  c.set({0, -1}, 2);
  const auto gamma = contours(c, model).front();
  const auto rep = verify_connector_bound(gamma, 1);
  EXPECT_EQ(rep.terminals, gamma.size());
  EXPECT_FALSE(rep.exact);
  EXPECT_TRUE(rep.passes);
  EXPECT_GE(rep.connector_size, gamma.size());
}

// Disconnected terminal sets: two far-apart cubes need the hops between them.
TEST(Connector, ExactSteinerOnSeparatedTerminals) {
  Contour g;
  g.imp = {Cube{{0, 0}, 1}, Cube{{4, 0}, 1}};
  const auto rep = verify_connector_bound(g, 1);
  EXPECT_TRUE(rep.exact);
  EXPECT_EQ(rep.connector_size, 5u);  // anchors 0..4 along a row
  EXPECT_FALSE(rep.passes);           // 5 > 2 * 2
  g.imp = {Cube{{0, 0}, 1}, Cube{{2, 2}, 1}, Cube{{0, 2}, 1}};
  EXPECT_EQ(verify_connector_bound(g, 1).connector_size, 4u);
}
