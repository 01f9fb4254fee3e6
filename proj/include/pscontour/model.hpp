#pragma once

// Hamiltonians built from finite-range interaction terms, folded into a
// per-cube potential U(pattern). Everything downstream works with the cube
// potential: its value set, the gap lambda0 above the minimum, the
// constant-ground-state certificate and the spin-permutation symmetry check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pscontour/error.hpp"
#include "pscontour/lattice.hpp"

namespace pscontour {

/// Spin values are 1..q.
using Spin = int;

inline constexpr std::uint64_t kDefaultPatternBudget = std::uint64_t{1} << 22;
inline constexpr double kLevelTolerance = 1e-9;
inline constexpr double kSymmetryTolerance = 1e-12;

/// Base-q positional code of a spin pattern. Position 0 is the most
/// significant digit; digit = spin - 1.
class PatternCodec {
 public:
  PatternCodec() = default;
  PatternCodec(int q, std::size_t length) : q_(q), weights_(length) {
    std::uint64_t w = 1;
    for (std::size_t p = length; p-- > 0;) {
      weights_[p] = w;
      w = saturating_mul(w, static_cast<std::uint64_t>(q));
    }
    count_ = w;
  }

  int q() const noexcept { return q_; }
  std::size_t length() const noexcept { return weights_.size(); }
  /// q^length, saturating.
  std::uint64_t count() const noexcept { return count_; }
  std::uint64_t weight(std::size_t p) const { return weights_[p]; }

  std::uint64_t encode(std::span<const Spin> pattern) const {
    std::uint64_t code = 0;
    for (std::size_t p = 0; p < weights_.size(); ++p)
      code += static_cast<std::uint64_t>(pattern[p] - 1) * weights_[p];
    return code;
  }

  std::vector<Spin> decode(std::uint64_t code) const {
    std::vector<Spin> out(weights_.size());
    for (std::size_t p = weights_.size(); p-- > 0;) {
      out[p] = static_cast<Spin>(code % static_cast<std::uint64_t>(q_)) + 1;
      code /= static_cast<std::uint64_t>(q_);
    }
    return out;
  }

  std::uint64_t constant_code(Spin j) const {
    std::uint64_t code = 0;
    for (auto w : weights_) code += static_cast<std::uint64_t>(j - 1) * w;
    return code;
  }

 private:
  static std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
    return a * b;
  }

  int q_ = 2;
  std::uint64_t count_ = 1;
  std::vector<std::uint64_t> weights_;
};

/// I(sigma_A) for one shape A (and implicitly all its translates).
/// The shape is stored translated so its per-axis minimum is 0; the table
/// is dense over q^|A| patterns in shape order, missing entries are 0.
class InteractionTerm {
 public:
  InteractionTerm() = default;
  InteractionTerm(std::vector<Site> offsets, int q) {
    if (offsets.empty()) throw ModelError("interaction term with empty shape");
    const int d = offsets.front().dim();
    for (const auto& o : offsets) {
      if (o.dim() != d) throw ModelError("interaction term offsets of mixed dimension");
    }
    Site lo = offsets.front();
    for (const auto& o : offsets)
      for (int k = 0; k < d; ++k) lo[k] = std::min(lo[k], o[k]);
    for (auto& o : offsets) o = o - lo;
    auto sorted = offsets;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ModelError("interaction term with duplicate offsets");
    shape_ = std::move(offsets);
    codec_ = PatternCodec(q, shape_.size());
    table_.assign(codec_.count(), 0.0);
  }

  const std::vector<Site>& shape() const noexcept { return shape_; }
  const PatternCodec& codec() const noexcept { return codec_; }
  std::span<const double> table() const noexcept { return table_; }
  int dim() const { return shape_.front().dim(); }

  Coord extent(int k) const {
    Coord hi = 0;
    for (const auto& o : shape_) hi = std::max(hi, o[k]);
    return hi;
  }

  void set(std::span<const Spin> pattern, double value) {
    check_pattern(pattern);
    table_[codec_.encode(pattern)] = value;
  }
  double at(std::span<const Spin> pattern) const {
    check_pattern(pattern);
    return table_[codec_.encode(pattern)];
  }
  double at_code(std::uint64_t code) const { return table_[code]; }

  void scale(double c) {
    for (auto& v : table_) v *= c;
  }

 private:
  void check_pattern(std::span<const Spin> pattern) const {
    if (pattern.size() != shape_.size())
      throw ModelError("pattern length " + std::to_string(pattern.size()) + " does not match shape size " +
                       std::to_string(shape_.size()));
    for (Spin v : pattern)
      if (v < 1 || v > codec_.q()) throw ModelError("spin value " + std::to_string(v) + " outside 1..q");
  }

  std::vector<Site> shape_;
  PatternCodec codec_;
  std::vector<double> table_;
};

struct ModelSpec {
  int d = 2;
  Coord r = 1;
  int q = 2;
  int s = 2;
  std::vector<InteractionTerm> terms;
  /// Canonical name for built-in models, empty otherwise.
  std::string built_in;

  void validate() const {
    if (d < 2) throw ModelError("dimension must be at least 2");
    if (r < 1) throw ModelError("range must be at least 1");
    if (q < 1) throw ModelError("spin count must be positive");
    if (s < 1 || s > q) throw ModelError("symmetric-sector size must satisfy 1 <= s <= q");
    for (const auto& t : terms) {
      if (t.dim() != d) throw ModelError("term dimension does not match model dimension");
      if (t.codec().q() != q) throw ModelError("term spin count does not match model");
      if (diameter(t.shape()) > r)
        throw ModelError("term shape has diameter " + std::to_string(diameter(t.shape())) + " > r = " +
                         std::to_string(r));
    }
  }

  void scale(double c) {
    for (auto& t : terms) t.scale(c);
  }
};

/// Built-in models.
namespace builtin {

/// -J * delta(sigma_x, sigma_y) on every pair at Chebyshev distance 1.
inline ModelSpec potts(int d = 2, Coord r = 1, int q = 2, double coupling = 1.0) {
  ModelSpec m{d, r, q, q, {}, "potts"};
  for (const auto& v : chebyshev_ball_offsets(d, 1)) {
    int k = 0;
    while (v[k] == 0) ++k;
    if (v[k] < 0) continue;  // one orientation per pair
    InteractionTerm term({Site::origin(d), v}, q);
    for (Spin a = 1; a <= q; ++a) {
      const Spin pat[2] = {a, a};
      term.set(pat, -coupling);
    }
    m.terms.push_back(std::move(term));
  }
  return m;
}

/// Two-state Potts model, the Ising model up to an additive constant.
inline ModelSpec ising(int d = 2, Coord r = 1, double coupling = 1.0) {
  auto m = potts(d, r, 2, coupling);
  m.built_in = "ising";
  return m;
}

/// Potts pairs plus a per-site penalty h on spins s+1..q.
inline ModelSpec potts_excited(int d, Coord r, int q, int s, double coupling, double penalty) {
  auto m = potts(d, r, q, coupling);
  m.s = s;
  m.built_in = "potts-excited";
  InteractionTerm site({Site::origin(d)}, q);
  for (Spin a = s + 1; a <= q; ++a) {
    const Spin pat[1] = {a};
    site.set(pat, penalty);
  }
  m.terms.push_back(std::move(site));
  return m;
}

/// Adds a single-site field of strength h favoring spin 1.
inline void add_field(ModelSpec& m, double h) {
  InteractionTerm site({Site::origin(m.d)}, m.q);
  const Spin pat[1] = {1};
  site.set(pat, -h);
  m.terms.push_back(std::move(site));
}

}  // namespace builtin

/// U(sigma_b) tabulated over every pattern of a range-r cube.
class CubePotential {
 public:
  CubePotential() = default;
  CubePotential(int d, Coord r, int q, std::vector<double> values)
      : d_(d), r_(r), codec_(q, cube_volume(d, r)), values_(std::move(values)) {}

  int dim() const noexcept { return d_; }
  Coord range() const noexcept { return r_; }
  const PatternCodec& codec() const noexcept { return codec_; }
  std::size_t pattern_count() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

  double operator[](std::uint64_t code) const { return values_[code]; }
  double operator()(std::span<const Spin> pattern) const { return values_[codec_.encode(pattern)]; }

 private:
  int d_ = 2;
  Coord r_ = 1;
  PatternCodec codec_;
  std::vector<double> values_;
};

inline void require_pattern_budget(const ModelSpec& m, std::uint64_t budget) {
  const auto count = saturating_pow(static_cast<std::uint64_t>(m.q), cube_volume(m.d, m.r));
  if (count > budget) throw CapacityError("cube pattern space", count, budget);
}

/// U(sigma_b) = sum over shapes A inside b of I(sigma_A) / n(A).
inline CubePotential build_cube_potential(const ModelSpec& m, std::uint64_t budget = kDefaultPatternBudget) {
  m.validate();
  require_pattern_budget(m, budget);
  const auto offsets = cube_offsets(m.d, m.r);
  const Box cube_box(Site::origin(m.d), offsets.back());
  const PatternCodec codec(m.q, offsets.size());

  // For each term, every placement inside the cube as a list of cube positions.
  struct Placement {
    const InteractionTerm* term;
    double weight;
    std::vector<std::size_t> positions;
  };
  std::vector<Placement> placements;
  for (const auto& term : m.terms) {
    const auto n = containing_cube_count(term.shape(), m.r);
    Site hi = Site::origin(m.d);
    for (int k = 0; k < m.d; ++k) hi[k] = m.r - term.extent(k);
    for (const auto& shift : Box(Site::origin(m.d), hi).sites()) {
      Placement pl{&term, 1.0 / static_cast<double>(n), {}};
      for (const auto& o : term.shape()) pl.positions.push_back(cube_box.index_of(o + shift));
      placements.push_back(std::move(pl));
    }
  }

  std::vector<double> values(codec.count(), 0.0);
  std::vector<Spin> pattern(offsets.size(), 1);
  for (std::uint64_t code = 0; code < codec.count(); ++code) {
    double u = 0.0;
    for (const auto& pl : placements) {
      std::uint64_t sub = 0;
      const auto& tc = pl.term->codec();
      for (std::size_t p = 0; p < pl.positions.size(); ++p)
        sub += static_cast<std::uint64_t>(pattern[pl.positions[p]] - 1) * tc.weight(p);
      u += pl.term->at_code(sub) * pl.weight;
    }
    values[code] = u;
    // advance the pattern odometer (last position fastest)
    for (std::size_t p = pattern.size(); p-- > 0;) {
      if (++pattern[p] <= m.q) break;
      pattern[p] = 1;
    }
  }
  return CubePotential(m.d, m.r, m.q, std::move(values));
}

struct SpectrumSummary {
  double u_min = 0.0;
  /// Second-lowest distinct level minus u_min; 0 when degenerate.
  double lambda0 = 0.0;
  std::vector<std::uint64_t> minimizing_patterns;
  /// Distinct values after clustering at kLevelTolerance.
  std::vector<double> levels;
  std::size_t value_set_size() const noexcept { return levels.size(); }
  bool degenerate() const noexcept { return levels.size() < 2; }
};

inline SpectrumSummary potential_spectrum(const CubePotential& u) {
  std::vector<double> sorted(u.values().begin(), u.values().end());
  std::sort(sorted.begin(), sorted.end());
  SpectrumSummary out;
  for (double v : sorted)
    if (out.levels.empty() || v - out.levels.back() > kLevelTolerance) out.levels.push_back(v);
  out.u_min = out.levels.front();
  out.lambda0 = out.levels.size() >= 2 ? out.levels[1] - out.u_min : 0.0;
  for (std::uint64_t code = 0; code < u.pattern_count(); ++code)
    if (u[code] - out.u_min <= kLevelTolerance) out.minimizing_patterns.push_back(code);
  return out;
}

inline SpectrumSummary potential_spectrum(const ModelSpec& m, std::uint64_t budget = kDefaultPatternBudget) {
  return potential_spectrum(build_cube_potential(m, budget));
}

/// Outcome of the constant-ground-state certificate. The certificate holds
/// when the minimizing cube patterns are exactly the constants 1..s; since
/// neighbouring cubes overlap, a configuration whose every cube is minimal
/// is then one of those constants.
struct GroundStateReport {
  std::vector<Spin> minimal_constants;
  std::vector<Spin> ground_states;
  bool certified = false;
  /// Minimizing patterns that are not constants in 1..s.
  std::vector<std::vector<Spin>> offending_patterns;
  /// Constants in 1..s that fail to be minimal.
  std::vector<Spin> missing_constants;
};

inline GroundStateReport verify_ground_states(const ModelSpec& m, const CubePotential& u,
                                              const SpectrumSummary& spec) {
  GroundStateReport rep;
  const auto& codec = u.codec();
  for (Spin j = 1; j <= m.q; ++j)
    if (u[codec.constant_code(j)] - spec.u_min <= kLevelTolerance) rep.minimal_constants.push_back(j);
  for (Spin j = 1; j <= m.s; ++j)
    if (std::find(rep.minimal_constants.begin(), rep.minimal_constants.end(), j) == rep.minimal_constants.end())
      rep.missing_constants.push_back(j);
  for (auto code : spec.minimizing_patterns) {
    bool allowed = false;
    for (Spin j = 1; j <= m.s && !allowed; ++j) allowed = code == codec.constant_code(j);
    if (!allowed) rep.offending_patterns.push_back(codec.decode(code));
  }
  rep.certified = rep.offending_patterns.empty() && rep.missing_constants.empty();
  if (rep.certified)
    for (Spin j = 1; j <= m.s; ++j) rep.ground_states.push_back(j);
  return rep;
}

/// g acting on a spin: permutes 1..s, fixes s+1..q. `perm[j-1]` is g(j).
inline Spin apply_permutation(std::span<const Spin> perm, Spin v) {
  return v <= static_cast<Spin>(perm.size()) ? perm[static_cast<std::size_t>(v - 1)] : v;
}

/// Cube-level invariance of U under the permutations of 1..s. Checks the
/// transposition (1 2) and the cycle (1 2 ... s), which generate the group.
inline bool check_symmetry(const ModelSpec& m, const CubePotential& u) {
  if (m.s < 2) return true;
  std::vector<std::vector<Spin>> generators;
  std::vector<Spin> swap(static_cast<std::size_t>(m.s)), cycle(static_cast<std::size_t>(m.s));
  std::iota(swap.begin(), swap.end(), 1);
  std::swap(swap[0], swap[1]);
  for (Spin j = 1; j <= m.s; ++j) cycle[static_cast<std::size_t>(j - 1)] = j % m.s + 1;
  generators.push_back(swap);
  generators.push_back(cycle);

  const auto& codec = u.codec();
  for (std::uint64_t code = 0; code < u.pattern_count(); ++code) {
    auto pattern = codec.decode(code);
    for (const auto& g : generators) {
      auto image = pattern;
      for (auto& v : image) v = apply_permutation(g, v);
      if (std::abs(u(image) - u[code]) > kSymmetryTolerance) return false;
    }
  }
  return true;
}

inline bool check_symmetry(const ModelSpec& m, std::uint64_t budget = kDefaultPatternBudget) {
  return check_symmetry(m, build_cube_potential(m, budget));
}

/// A model together with its cube potential, spectrum and certificates.
/// The relative table stores U - U^min, with the lowest level snapped to 0.
class Model {
 public:
  explicit Model(ModelSpec spec, std::uint64_t budget = kDefaultPatternBudget)
      : spec_(std::move(spec)),
        potential_(build_cube_potential(spec_, budget)),
        spectrum_(potential_spectrum(potential_)),
        ground_states_(verify_ground_states(spec_, potential_, spectrum_)),
        symmetric_(check_symmetry(spec_, potential_)) {
    const auto& codec = potential_.codec();
    relative_.resize(potential_.pattern_count());
    proper_.assign(potential_.pattern_count(), 0);
    for (std::uint64_t c = 0; c < relative_.size(); ++c) {
      const double diff = potential_[c] - spectrum_.u_min;
      relative_[c] = diff <= kLevelTolerance ? 0.0 : diff;
    }
    for (Spin j = 1; j <= spec_.s; ++j) proper_[codec.constant_code(j)] = 1;
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  int d() const noexcept { return spec_.d; }
  Coord r() const noexcept { return spec_.r; }
  int q() const noexcept { return spec_.q; }
  int s() const noexcept { return spec_.s; }
  const CubePotential& potential() const noexcept { return potential_; }
  const SpectrumSummary& spectrum() const noexcept { return spectrum_; }
  const GroundStateReport& ground_states() const noexcept { return ground_states_; }
  double u_min() const noexcept { return spectrum_.u_min; }
  double lambda0() const noexcept { return spectrum_.lambda0; }
  bool symmetric() const noexcept { return symmetric_; }
  bool certified() const noexcept { return ground_states_.certified; }
  /// Peierls constant is positive (at least two distinct cube values).
  bool gapped() const noexcept { return !spectrum_.degenerate(); }

  /// U(code) - U^min.
  double relative(std::uint64_t code) const { return relative_[code]; }
  std::span<const double> relative_table() const noexcept { return relative_; }
  /// True when the pattern coincides with a ground-state restriction.
  bool proper(std::uint64_t code) const { return proper_[code] != 0; }
  bool is_ground_spin(Spin j) const { return certified() && j >= 1 && j <= spec_.s; }

  void require_certified(const char* operation) const {
    if (!certified())
      throw PreconditionError(std::string(operation) +
                              ": model lacks the constant-ground-state certificate (A1 unverified)");
  }
  void require_gapped(const char* operation) const {
    if (!gapped()) throw PreconditionError(std::string(operation) + ": cube potential is constant (lambda0 = 0)");
  }

 private:
  ModelSpec spec_;
  CubePotential potential_;
  SpectrumSummary spectrum_;
  GroundStateReport ground_states_;
  bool symmetric_ = false;
  std::vector<double> relative_;
  std::vector<std::uint8_t> proper_;
};

}  // namespace pscontour
