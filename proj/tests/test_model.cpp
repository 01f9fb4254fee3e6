#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "pscontour/contour.hpp"
#include "pscontour/hamiltonian.hpp"
#include "pscontour/model.hpp"

using namespace pscontour;

namespace {

// Potts-Chebyshev on a 2x2 cube by hand: the four axis pairs each lie in two
// cubes (weight 1/2), the two diagonals in one (weight 1).
double potts_cube_oracle(const std::vector<Spin>& p, double coupling) {
  // positions: 0=(0,0) 1=(0,1) 2=(1,0) 3=(1,1)
  const int axis[4][2] = {{0, 1}, {2, 3}, {0, 2}, {1, 3}};
  const int diag[2][2] = {{0, 3}, {1, 2}};
  double u = 0;
  for (auto& e : axis) u -= 0.5 * coupling * (p[e[0]] == p[e[1]]);
  for (auto& e : diag) u -= coupling * (p[e[0]] == p[e[1]]);
  return u;
}

std::vector<Spin> decode(std::uint64_t code, int q, std::size_t len) { return PatternCodec(q, len).decode(code); }

Configuration random_config(const Box& box, int q, Spin exterior, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> spin(1, q);
  auto c = Configuration::uniform(box, exterior);
  for (auto& v : c.spins) v = spin(gen);
  return c;
}

}  // namespace

TEST(Model, PottsCubePotentialMatchesHandOracle) {
  for (int q : {2, 3}) {
    const auto u = build_cube_potential(builtin::potts(2, 1, q, 1.0));
    ASSERT_EQ(u.pattern_count(), static_cast<std::size_t>(q * q * q * q));
    for (std::uint64_t c = 0; c < u.pattern_count(); ++c)
      EXPECT_NEAR(u[c], potts_cube_oracle(decode(c, q, 4), 1.0), 1e-15) << c;
  }
}

TEST(Model, PottsExamples) {
  const auto u = build_cube_potential(builtin::potts());
  EXPECT_DOUBLE_EQ(u(std::vector<Spin>{1, 1, 1, 1}), -4.0);
  EXPECT_DOUBLE_EQ(u(std::vector<Spin>{1, 2, 1, 1}), -2.0);
  const auto spec = potential_spectrum(u);
  EXPECT_DOUBLE_EQ(spec.u_min, -4.0);
  EXPECT_DOUBLE_EQ(spec.lambda0, 2.0);
  EXPECT_EQ(spec.value_set_size(), 3u);
  EXPECT_FALSE(spec.degenerate());
}

TEST(Model, EmptyModelIsDegenerateAndUncertified) {
  ModelSpec m;
  const auto u = build_cube_potential(m);
  for (double v : u.values()) EXPECT_EQ(v, 0.0);
  const auto spec = potential_spectrum(u);
  EXPECT_TRUE(spec.degenerate());
  EXPECT_EQ(spec.value_set_size(), 1u);
  EXPECT_FALSE(verify_ground_states(m, u, spec).certified);
}

TEST(Model, ScalingIsLinear) {
  for (double c : {0.5, 3.0}) {
    auto m = builtin::potts(2, 1, 3, 1.0);
    const auto base = potential_spectrum(m);
    m.scale(c);
    const auto scaled = potential_spectrum(m);
    EXPECT_NEAR(scaled.u_min, c * base.u_min, 1e-12);
    EXPECT_NEAR(scaled.lambda0, c * base.lambda0, 1e-12);
    EXPECT_EQ(scaled.minimizing_patterns, base.minimizing_patterns);
  }
}

TEST(Model, GroundStateCertificate) {
  for (int q : {2, 3}) {
    const Model model(builtin::potts(2, 1, q));
    EXPECT_TRUE(model.certified());
    const auto& gs = model.ground_states();
    EXPECT_EQ(gs.ground_states.size(), static_cast<std::size_t>(q));
    // oracle: scan all patterns, minimum set must be the q constants
    std::set<std::uint64_t> mins;
    double best = 1e300;
    for (std::uint64_t c = 0; c < model.potential().pattern_count(); ++c)
      best = std::min(best, potts_cube_oracle(decode(c, q, 4), 1.0));
    for (std::uint64_t c = 0; c < model.potential().pattern_count(); ++c)
      if (potts_cube_oracle(decode(c, q, 4), 1.0) == best) mins.insert(c);
    std::set<std::uint64_t> constants;
    for (Spin j = 1; j <= q; ++j) constants.insert(model.potential().codec().constant_code(j));
    EXPECT_EQ(mins, constants);
  }
}

TEST(Model, ExcitedSpinsAreNotGroundStates) {
  const Model model(builtin::potts_excited(2, 1, 3, 2, 1.0, 1.0));
  EXPECT_TRUE(model.certified());
  EXPECT_EQ(model.s(), 2);
  EXPECT_TRUE(model.symmetric());
  const Model wrong_s([] {
    auto m = builtin::potts(2, 1, 3);
    m.s = 2;
    return m;
  }());
  EXPECT_FALSE(wrong_s.certified());
}

TEST(Model, Symmetry) {
  EXPECT_TRUE(check_symmetry(builtin::potts(2, 1, 4)));
  auto field = builtin::ising();
  builtin::add_field(field, 0.3);
  EXPECT_FALSE(check_symmetry(field));
  auto single = builtin::potts(2, 1, 3);
  builtin::add_field(single, 0.3);
  single.s = 1;
  EXPECT_TRUE(check_symmetry(single));
}

TEST(Model, TermDiameterBeyondRangeIsRejected) {
  ModelSpec m;
  InteractionTerm t({{0, 0}, {2, 0}}, 2);
  m.terms.push_back(t);
  EXPECT_THROW(m.validate(), ModelError);
  EXPECT_THROW(build_cube_potential(m), ModelError);
}

TEST(Model, PatternBudget) {
  auto m = builtin::potts(3, 2, 3);  // 3^27 patterns
  EXPECT_THROW(build_cube_potential(m), CapacityError);
}

TEST(Hamiltonian, SingleFlip) {
  const Model model(builtin::ising());
  auto c = Configuration::uniform(Box::centered(2, 5), 1);
  EXPECT_EQ(conditional_hamiltonian(c, model), 0.0);
  c.set({0, 0}, 2);
  EXPECT_DOUBLE_EQ(conditional_hamiltonian(c, model), 8.0);
  EXPECT_DOUBLE_EQ(relative_hamiltonian(c, 1, model), 8.0);
  EXPECT_EQ(boundary(c, model).size(), 4u);
  EXPECT_THROW(relative_hamiltonian(c, 2, model), InputError);
  EXPECT_THROW(relative_hamiltonian(c, 3, model), InputError);
}

TEST(Hamiltonian, AdditivityOverImproperCubes) {
  const Model model(builtin::potts(2, 1, 3));
  std::mt19937_64 gen(5);
  for (int t = 0; t < 100; ++t) {
    const auto c = random_config(Box::centered(2, 5), 3, 1 + t % 3, gen);
    double sum = 0.0;
    for (const auto& b : boundary(c, model).improper_cubes) {
      std::vector<Spin> p;
      for (const auto& off : cube_offsets(2, 1)) p.push_back(c.at(b.anchor + off));
      sum += model.potential()(p) - model.u_min();
    }
    EXPECT_NEAR(conditional_hamiltonian(c, model), sum, 1e-9);
    EXPECT_NEAR(conditional_hamiltonian(c, model), relative_hamiltonian(c, c.exterior, model), 1e-9);
  }
}

TEST(Hamiltonian, PermutationInvariance) {
  const Model model(builtin::potts(2, 1, 3));
  std::mt19937_64 gen(9);
  const std::vector<Spin> g{2, 3, 1};
  for (int t = 0; t < 50; ++t) {
    auto c = random_config(Box::centered(2, 4), 3, 1, gen);
    auto gc = c;
    for (auto& v : gc.spins) v = g[v - 1];
    gc.exterior = g[c.exterior - 1];
    EXPECT_NEAR(conditional_hamiltonian(c, model), conditional_hamiltonian(gc, model), 1e-12);
  }
}

TEST(Hamiltonian, PeierlsOnRandomSamples) {
  for (int q : {2, 3}) {
    const Model model(builtin::potts(2, 1, q));
    std::mt19937_64 gen(17);
    std::vector<Configuration> samples;
    samples.push_back(Configuration::uniform(Box::centered(2, 6), 1));
    auto flip = samples.front();
    flip.set({0, 0}, 2);
    samples.push_back(flip);
    for (int t = 0; t < 300; ++t) samples.push_back(random_config(Box::centered(2, 6), q, 1, gen));
    const auto rep = verify_peierls(model, samples);
    EXPECT_TRUE(rep.passed());
    EXPECT_EQ(rep.checked, samples.size());
    EXPECT_DOUBLE_EQ(rep.tightest_ratio, 1.0);  // the single flip is tight
  }
  EXPECT_THROW(verify_peierls(Model(ModelSpec{}), std::vector<Configuration>{}), PreconditionError);
}
