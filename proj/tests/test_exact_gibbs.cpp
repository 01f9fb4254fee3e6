#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "pscontour/exact_gibbs.hpp"
#include "pscontour/hamiltonian.hpp"

using namespace pscontour;

namespace {

// Reference distribution: every configuration enumerated through the public
// Configuration API and weighted with a fresh Hamiltonian evaluation.
struct BruteForce {
  std::vector<Configuration> configs;
  std::vector<double> weights;  // normalized
  double log_z = 0.0;
};

BruteForce brute(const Model& m, const Box& box, Spin exterior, double beta, bool absolute = false) {
  BruteForce out;
  const std::size_t n = box.size();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::uint64_t>(m.q());
  std::vector<double> energy;
  for (std::uint64_t code = 0; code < total; ++code) {
    auto c = Configuration::uniform(box, exterior);
    auto rest = code;
    for (std::size_t i = n; i-- > 0;) {
      c.spins[i] = static_cast<Spin>(1 + rest % static_cast<std::uint64_t>(m.q()));
      rest /= static_cast<std::uint64_t>(m.q());
    }
    energy.push_back(absolute ? absolute_conditional_hamiltonian(c, m) : conditional_hamiltonian(c, m));
    out.configs.push_back(std::move(c));
  }
  const double e0 = *std::min_element(energy.begin(), energy.end());
  double z = 0.0;
  for (double e : energy) {
    out.weights.push_back(std::exp(-beta * (e - e0)));
    z += out.weights.back();
  }
  for (auto& w : out.weights) w /= z;
  out.log_z = std::log(z) - beta * e0;
  return out;
}

double brute_marginal(const BruteForce& b, const Site& x, Spin j) {
  double p = 0.0;
  for (std::size_t k = 0; k < b.configs.size(); ++k) p += b.weights[k] * (b.configs[k].at(x) == j);
  return p;
}

}  // namespace

TEST(ExactGibbs, InfiniteTemperatureIsUniform) {
  const Model model(builtin::potts(2, 1, 3));
  const auto d = enumerate_distribution(model, {Box::centered(2, 3), 1, 0.0});
  for (double p : d.marginals) EXPECT_NEAR(p, 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(d.log_partition, 9 * std::log(3.0), 1e-12);
  EXPECT_EQ(d.sample_space_size, 19683u);
}

TEST(ExactGibbs, SingleSiteBox) {
  const Model model(builtin::ising());
  for (double beta : {0.1, 0.5, 1.0, 2.0}) {
    const auto d = enumerate_distribution(model, {Box({0, 0}, {0, 0}), 1, beta});
    const double w = std::exp(-8 * beta);
    EXPECT_NEAR(d.marginal({0, 0}, 2), w / (1 + w), 1e-15);
  }
}

TEST(ExactGibbs, MarginalsMatchBruteForce) {
  for (int q : {2, 3}) {
    const Model model(builtin::potts(2, 1, q));
    const Box box = q == 2 ? Box::centered(2, 3) : Box({0, 0}, {1, 2});
    for (double beta : {0.3, 1.0}) {
      const auto ref = brute(model, box, 2, beta);
      const auto d = enumerate_distribution(model, {box, 2, beta});
      EXPECT_NEAR(d.log_partition, ref.log_z, 1e-11);
      for (const auto& x : box.sites()) {
        double sum = 0.0;
        for (Spin j = 1; j <= q; ++j) {
          EXPECT_NEAR(d.marginal(x, j), brute_marginal(ref, x, j), 1e-13);
          sum += d.marginal(x, j);
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(ExactGibbs, AbsoluteEnergiesGiveSameProbabilities) {
  const Model model(builtin::ising());
  const Box box = Box::centered(2, 3);
  const auto ref = brute(model, box, 1, 0.7, true);
  const auto d = enumerate_distribution(model, {box, 1, 0.7});
  for (const auto& x : box.sites()) EXPECT_NEAR(d.marginal(x, 2), brute_marginal(ref, x, 2), 1e-13);
}

TEST(ExactGibbs, PermutationCovariance) {
  const Model model(builtin::potts(2, 1, 3));
  const Box box = Box::centered(2, 3);
  const std::vector<Spin> g{2, 3, 1};
  const auto d1 = enumerate_distribution(model, {box, 1, 0.8});
  const auto dg = enumerate_distribution(model, {box, g[0], 0.8});
  for (const auto& x : box.sites())
    for (Spin j = 1; j <= 3; ++j) EXPECT_NEAR(dg.marginal(x, g[j - 1]), d1.marginal(x, j), 1e-12);
}

TEST(ExactGibbs, WorkerCountsAgree) {
  const Model model(builtin::potts(2, 1, 3));
  const FiniteVolumeEnsemble ens{Box::centered(2, 3), 1, 1.3};
  const auto one = enumerate_distribution(model, ens, {kDefaultEnumerationBudget, 1});
  const auto four = enumerate_distribution(model, ens, {kDefaultEnumerationBudget, 4});
  const auto four_again = enumerate_distribution(model, ens, {kDefaultEnumerationBudget, 4});
  EXPECT_NEAR(one.log_partition, four.log_partition, 1e-12);
  for (std::size_t k = 0; k < one.marginals.size(); ++k) {
    EXPECT_NEAR(one.marginals[k], four.marginals[k], 1e-12);
    EXPECT_EQ(four.marginals[k], four_again.marginals[k]);
  }
}

TEST(ExactGibbs, CapacityErrorCarriesCount) {
  const Model model(builtin::ising());
  try {
    enumerate_distribution(model, {Box::centered(2, 6), 1, 1.0});
    FAIL() << "expected a capacity error";
  } catch (const CapacityError& e) {
    EXPECT_EQ(e.required(), std::uint64_t{1} << 36);
    EXPECT_EQ(e.budget(), kDefaultEnumerationBudget);
  }
  EXPECT_THROW(enumerate_distribution(model, {Box::centered(2, 3), 1, -1.0}), InputError);
  EXPECT_THROW(enumerate_distribution(model, {Box::centered(2, 3), 3, 1.0}), InputError);
}

TEST(ContourProbability, AgreesWithBruteForce) {
  const Model model(builtin::ising());
  const Box box = Box::centered(2, 3);
  const double beta = 1.0;
  const auto ref = brute(model, box, 1, beta);
  std::map<std::vector<MarkedSite>, double> p;
  for (std::size_t k = 0; k < ref.configs.size(); ++k)
    for (const auto& g : contours(ref.configs[k], model)) p[g.marked_sites()] += ref.weights[k];

  const auto stats = verify_peierls_bound(model, {box, 1, beta});
  EXPECT_EQ(stats.records.size(), p.size());
  EXPECT_EQ(stats.violations, 0u);
  for (const auto& rec : stats.records) {
    EXPECT_NEAR(rec.probability, p.at(rec.contour.marked_sites()), 1e-14);
    EXPECT_NEAR(rec.bound, std::exp(-beta * 2.0 * rec.contour.size()), 1e-15);
    EXPECT_NEAR(rec.slack, rec.bound - rec.probability, 1e-15);
    EXPECT_LE(rec.probability, rec.bound + kBoundSlack);
  }
  for (std::size_t k = 1; k < stats.records.size(); ++k)
    EXPECT_LE(stats.records[k - 1].slack, stats.records[k].slack);

  auto flip = Configuration::uniform(box, 1);
  flip.set({0, 0}, 2);
  const auto gamma = contours(flip, model).front();
  const double pc = contour_probability(model, {box, 1, beta}, gamma);
  EXPECT_NEAR(pc, p.at(gamma.marked_sites()), 1e-14);
  EXPECT_LE(pc, std::exp(-8.0));

  // union bound over the single-site contours
  double sum = 0.0;
  for (const auto& x : box.sites()) {
    auto c = Configuration::uniform(box, 1);
    c.set(x, 2);
    sum += contour_probability(model, {box, 1, beta}, contours(c, model).front());
  }
  EXPECT_LE(sum, 9 * std::exp(-beta * 2.0 * 4));
}

TEST(ContourProbability, OutsideBoxIsZero) {
  const Model model(builtin::ising());
  auto far = Configuration::uniform(Box({10, 10}, {12, 12}), 1);
  far.set({11, 11}, 2);
  const auto gamma = contours(far, model).front();
  EXPECT_EQ(contour_probability(model, {Box::centered(2, 3), 1, 1.0}, gamma), 0.0);
}

TEST(ContourStatistics, InfiniteTemperatureBoundIsOne) {
  const Model model(builtin::ising());
  const auto stats = verify_peierls_bound(model, {Box::centered(2, 3), 1, 0.0});
  for (const auto& rec : stats.records) EXPECT_EQ(rec.bound, 1.0);
  EXPECT_EQ(stats.violations, 0u);
}

TEST(ContourSizeTail, AgreesWithBruteForce) {
  const Model model(builtin::ising());
  const Box box = Box::centered(2, 3);
  const auto ref = brute(model, box, 1, 0.6);
  std::vector<double> want(13, 0.0);
  for (std::size_t k = 0; k < ref.configs.size(); ++k) {
    std::size_t biggest = 0;
    const auto gs = contours(ref.configs[k], model);
    for (const auto& g : gs) biggest = std::max(biggest, g.size());
    for (std::size_t n = 0; n < want.size(); ++n)
      if (!gs.empty() && biggest >= n) want[n] += ref.weights[k];
  }
  const auto got = contour_size_tail(model, {box, 1, 0.6}, 12);
  for (std::size_t n = 0; n < want.size(); ++n) EXPECT_NEAR(got[n], want[n], 1e-13) << n;
  EXPECT_LE(got[0], 1.0);
}

TEST(Trend, Examples) {
  const Model ising(builtin::ising());
  const std::vector<double> zero{0.0};
  EXPECT_NEAR(marginal_trend(ising, Box::centered(2, 3), {0, 0}, 1, 2, zero).values[0], 0.5, 1e-15);
  const Model potts3(builtin::potts(2, 1, 3));
  const std::vector<double> grid{0.5, 1, 2, 3};
  for (Spin j : {2, 3}) {
    const auto t = marginal_trend(potts3, Box::centered(2, 3), {0, 0}, 1, j, grid);
    EXPECT_TRUE(t.strictly_decreasing);
    EXPECT_TRUE(t.decreasing_after_peak);
    EXPECT_LT(t.values.back(), 0.05);
  }
  EXPECT_THROW(marginal_trend(ising, Box::centered(2, 3), {0, 0}, 1, 1, grid), InputError);
}

TEST(Coexistence, GapBasics) {
  const Model model(builtin::ising());
  const std::vector<double> betas{0.0, 1.0};
  const auto rows = coexistence_gap(model, Box::centered(2, 3), {0, 0}, betas);
  EXPECT_NEAR(rows[0].gap, 0.0, 1e-15);
  for (const auto& row : rows) EXPECT_LE(row.permutation_residual, 1e-12);
  EXPECT_GT(rows[1].gap, 0.0);
  auto field = builtin::ising();
  builtin::add_field(field, 0.2);
  EXPECT_THROW(coexistence_gap(Model(field), Box::centered(2, 3), {0, 0}, betas), PreconditionError);
}

TEST(Dlr, Consistency) {
  const Model model(builtin::potts(2, 1, 3));
  const FiniteVolumeEnsemble ens{Box::centered(2, 3), 1, 1.0};
  EXPECT_LE(dlr_consistency(model, ens, ens.box), 1e-12);
  EXPECT_LE(dlr_consistency(model, ens, Box({0, 0}, {0, 0})), 1e-10);
  EXPECT_LE(dlr_consistency(model, ens, Box({-1, -1}, {0, 0})), 1e-10);
  EXPECT_LE(dlr_consistency(model, {ens.box, 1, 0.0}, Box({0, 0}, {1, 1})), 1e-14);
  EXPECT_THROW(dlr_consistency(model, ens, Box({0, 0}, {2, 2})), InputError);
}
