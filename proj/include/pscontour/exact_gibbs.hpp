#pragma once

// Exact finite-volume Gibbs distributions by enumerating every configuration
// of a box with a fixed exterior spin. Weights are exp(-beta * E) with E the
// relative conditional energy (U - U^min summed over the cubes meeting the
// box); the dropped |C(box)| U^min term cancels in every probability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "pscontour/configuration.hpp"
#include "pscontour/contour.hpp"
#include "pscontour/error.hpp"
#include "pscontour/hamiltonian.hpp"
#include "pscontour/model.hpp"

namespace pscontour {

inline constexpr std::uint64_t kDefaultEnumerationBudget = std::uint64_t{1} << 26;

struct FiniteVolumeEnsemble {
  Box box;
  Spin exterior = 1;
  double beta = 1.0;

  void validate(const Model& model) const {
    if (box.dim() != model.d()) throw InputError("ensemble box dimension does not match the model");
    if (exterior < 1 || exterior > model.s()) throw InputError("exterior spin must lie in 1..s");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("beta must be a finite nonnegative number");
  }
};

struct EnumerationOptions {
  std::uint64_t budget = kDefaultEnumerationBudget;
  unsigned workers = 1;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void add(const CompensatedSum& o) {
    add(o.sum_);
    add(o.comp_);
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Splits [0, count) into `workers` contiguous chunks, runs body(begin, end)
/// on each (concurrently when workers > 1) and returns the partial results
/// in chunk order.
template <class Partial, class Body>
std::vector<Partial> run_partitioned(std::uint64_t count, unsigned workers, Body&& body) {
  workers = std::max(1u, workers);
  if (count < workers) workers = static_cast<unsigned>(std::max<std::uint64_t>(1, count));
  std::vector<Partial> partials(workers);
  auto bounds = [&](unsigned w) { return count * w / workers; };
  if (workers == 1) {
    partials[0] = body(std::uint64_t{0}, count);
    return partials;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w)
    threads.emplace_back([&, w] {
      try {
        partials[w] = body(bounds(w), bounds(w + 1));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return partials;
}

/// Walks configurations by index. Index digits are (spin - 1) in base q with
/// box site 0 most significant. Cube codes are updated incrementally; the
/// energy is re-summed over all cubes in fixed order so that it does not
/// depend on the walk.
class ConfigurationSweep {
 public:
  struct Cursor {
    std::uint64_t index;
    std::span<const Spin> spins;
    std::span<const Spin> buffer;
    double energy;
  };

  ConfigurationSweep(const Model& model, const Box& box, Spin exterior,
                     std::uint64_t budget = kDefaultEnumerationBudget)
      : model_(&model), frame_(box, model.r(), model.q()), exterior_(exterior) {
    count_ = saturating_pow(static_cast<std::uint64_t>(model.q()), box.size());
    if (count_ > budget) throw CapacityError("configuration space of box " + box.to_string(), count_, budget);
  }

  std::uint64_t count() const noexcept { return count_; }
  const BoxFrame& frame() const noexcept { return frame_; }
  Spin exterior() const noexcept { return exterior_; }

  template <class Visit>
  void run(std::uint64_t begin, std::uint64_t end, Visit&& visit) const {
    if (begin >= end) return;
    const std::size_t n = frame_.site_count();
    const auto q = static_cast<std::uint64_t>(model_->q());
    std::vector<Spin> spins(n);
    std::uint64_t rest = begin;
    for (std::size_t i = n; i-- > 0;) {
      spins[i] = static_cast<Spin>(rest % q) + 1;
      rest /= q;
    }
    Configuration c{frame_.box(), spins, exterior_};
    auto buffer = frame_.make_buffer(c);
    std::vector<std::uint64_t> codes(frame_.cube_count());
    for (std::size_t b = 0; b < codes.size(); ++b) codes[b] = frame_.cube_code(buffer, b);
    const auto& codec = frame_.codec();
    auto set_site = [&](std::size_t i, Spin v) {
      const Spin old = spins[i];
      spins[i] = v;
      buffer[frame_.padded_index(i)] = v;
      const auto cubes = frame_.cubes_of_site(i);
      for (std::size_t m = 0; m < cubes.size(); ++m)
        codes[cubes[m]] = codes[cubes[m]] + static_cast<std::uint64_t>(v - 1) * codec.weight(m) -
                          static_cast<std::uint64_t>(old - 1) * codec.weight(m);
    };
    for (std::uint64_t idx = begin;; ++idx) {
      double e = 0.0;
      for (auto code : codes) e += model_->relative(code);
      visit(Cursor{idx, spins, buffer, e});
      if (idx + 1 == end) break;
      for (std::size_t i = n; i-- > 0;) {
        if (spins[i] < model_->q()) {
          set_site(i, spins[i] + 1);
          break;
        }
        set_site(i, 1);
      }
    }
  }

 private:
  const Model* model_;
  BoxFrame frame_;
  Spin exterior_;
  std::uint64_t count_ = 0;
};

/// Lowest relative energy over the ensemble. Zero without enumeration when
/// the exterior is a certified ground state (the constant configuration).
inline double minimum_energy(const Model& model, const ConfigurationSweep& sweep, unsigned workers) {
  if (model.is_ground_spin(sweep.exterior())) return 0.0;
  auto parts = run_partitioned<double>(sweep.count(), workers, [&](std::uint64_t b, std::uint64_t e) {
    double lo = std::numeric_limits<double>::infinity();
    sweep.run(b, e, [&](const ConfigurationSweep::Cursor& cur) { lo = std::min(lo, cur.energy); });
    return lo;
  });
  return *std::min_element(parts.begin(), parts.end());
}

struct DistributionSummary {
  Box box;
  int q = 2;
  /// log of sum over configurations of exp(-beta * relative energy).
  double log_partition = 0.0;
  /// marginals[i * q + (spin - 1)] for box site i.
  std::vector<double> marginals;
  std::uint64_t sample_space_size = 0;

  double marginal(const Site& x, Spin j) const {
    if (!box.contains(x)) throw InputError("site " + x.to_string() + " outside box " + box.to_string());
    return marginals[box.index_of(x) * static_cast<std::size_t>(q) + static_cast<std::size_t>(j - 1)];
  }
};

inline DistributionSummary enumerate_distribution(const Model& model, const FiniteVolumeEnsemble& ens,
                                                  const EnumerationOptions& opt = {}) {
  ens.validate(model);
  const ConfigurationSweep sweep(model, ens.box, ens.exterior, opt.budget);
  const double e_min = minimum_energy(model, sweep, opt.workers);
  const std::size_t n = ens.box.size();
  const auto q = static_cast<std::size_t>(model.q());

  struct Partial {
    CompensatedSum z;
    std::vector<CompensatedSum> site_spin;
  };
  auto parts = run_partitioned<Partial>(sweep.count(), opt.workers, [&](std::uint64_t b, std::uint64_t e) {
    Partial p;
    p.site_spin.resize(n * q);
    sweep.run(b, e, [&](const ConfigurationSweep::Cursor& cur) {
      const double w = std::exp(-ens.beta * (cur.energy - e_min));
      p.z.add(w);
      for (std::size_t i = 0; i < n; ++i) p.site_spin[i * q + static_cast<std::size_t>(cur.spins[i] - 1)].add(w);
    });
    return p;
  });
  Partial total;
  total.site_spin.resize(n * q);
  for (const auto& p : parts) {
    total.z.add(p.z);
    for (std::size_t k = 0; k < n * q; ++k) total.site_spin[k].add(p.site_spin[k]);
  }
  DistributionSummary out;
  out.box = ens.box;
  out.q = model.q();
  out.sample_space_size = sweep.count();
  const double z = total.z.value();
  out.log_partition = std::log(z) - ens.beta * e_min;
  out.marginals.resize(n * q);
  for (std::size_t k = 0; k < n * q; ++k) out.marginals[k] = total.site_spin[k].value() / z;
  return out;
}

struct ContourRecord {
  Contour contour;
  double probability = 0.0;
  /// exp(-beta * lambda0 * |gamma|)
  double bound = 1.0;
  double slack = 1.0;
};

struct ContourStatistics {
  double beta = 0.0;
  double lambda0 = 0.0;
  /// Sorted by slack, tightest first.
  std::vector<ContourRecord> records;
  std::size_t violations = 0;
  double log_partition = 0.0;
};

inline constexpr double kBoundSlack = 1e-12;

namespace detail {

struct KeyHash {
  std::size_t operator()(const std::vector<std::uint32_t>& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : k) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

using ContourWeights = std::unordered_map<std::vector<std::uint32_t>, double, KeyHash>;

/// Rebuilds the contour whose hash key is `key` by placing its marked sites
/// on the box with the exterior elsewhere.
inline Contour contour_from_key(const BoxFrame& frame, const Model& model, std::span<const std::uint32_t> key,
                                Spin exterior) {
  Configuration c = Configuration::uniform(frame.box(), exterior);
  const auto q = static_cast<std::uint32_t>(model.q());
  for (auto k : key) c.spins[k / q] = static_cast<Spin>(k % q) + 1;
  auto found = contours(c, model);
  return found.front();
}

}  // namespace detail

/// Exact probability of every contour realized in the box, together with the
/// Peierls-type bound exp(-beta lambda0 |gamma|). Every contour with nonzero
/// probability appears in the sweep, so the records cover all of them.
inline ContourStatistics contour_statistics(const Model& model, const FiniteVolumeEnsemble& ens,
                                            const EnumerationOptions& opt = {}) {
  model.require_certified("contour_statistics");
  model.require_gapped("contour_statistics");
  ens.validate(model);
  const ConfigurationSweep sweep(model, ens.box, ens.exterior, opt.budget);

  struct Partial {
    CompensatedSum z;
    detail::ContourWeights weights;
    std::vector<std::vector<std::uint32_t>> order;  // first-seen order, for deterministic merge
  };
  auto parts = run_partitioned<Partial>(sweep.count(), opt.workers, [&](std::uint64_t b, std::uint64_t e) {
    Partial p;
    ContourScanner scanner(sweep.frame(), model);
    std::vector<std::uint32_t> key;
    sweep.run(b, e, [&](const ConfigurationSweep::Cursor& cur) {
      const double w = std::exp(-ens.beta * cur.energy);
      p.z.add(w);
      scanner.scan(cur.spins, cur.buffer, ens.exterior);
      for (const auto& comp : scanner.components()) {
        scanner.key(comp, cur.spins, key);
        auto [it, inserted] = p.weights.try_emplace(key, 0.0);
        if (inserted) p.order.push_back(key);
        it->second += w;
      }
    });
    return p;
  });

  CompensatedSum z;
  detail::ContourWeights merged;
  std::vector<std::vector<std::uint32_t>> order;
  for (auto& p : parts) {
    z.add(p.z);
    for (auto& k : p.order) {
      auto [it, inserted] = merged.try_emplace(k, 0.0);
      if (inserted) order.push_back(k);
      it->second += p.weights[k];
    }
  }

  ContourStatistics out;
  out.beta = ens.beta;
  out.lambda0 = model.lambda0();
  out.log_partition = std::log(z.value());
  for (const auto& k : order) {
    ContourRecord rec;
    rec.contour = detail::contour_from_key(sweep.frame(), model, k, ens.exterior);
    rec.probability = merged[k] / z.value();
    rec.bound = std::exp(-ens.beta * model.lambda0() * static_cast<double>(rec.contour.size()));
    rec.slack = rec.bound - rec.probability;
    if (rec.probability > rec.bound + kBoundSlack) ++out.violations;
    out.records.push_back(std::move(rec));
  }
  std::stable_sort(out.records.begin(), out.records.end(), [](const ContourRecord& a, const ContourRecord& b) {
    if (a.slack != b.slack) return a.slack < b.slack;
    return a.contour.marked_sites() < b.contour.marked_sites();
  });
  return out;
}

/// contour_statistics, failing hard on the first violated bound.
inline ContourStatistics verify_peierls_bound(const Model& model, const FiniteVolumeEnsemble& ens,
                                              const EnumerationOptions& opt = {}) {
  auto stats = contour_statistics(model, ens, opt);
  if (stats.violations > 0) {
    const auto& w = stats.records.front();
    throw VerificationFailure("contour probability bound violated at beta=" + std::to_string(ens.beta) + " by " +
                              w.contour.to_string() + ": p=" + std::to_string(w.probability) +
                              " > bound=" + std::to_string(w.bound));
  }
  return stats;
}

/// Probability that gamma is one of the contours of a configuration drawn
/// from the ensemble.
inline double contour_probability(const Model& model, const FiniteVolumeEnsemble& ens, const Contour& gamma,
                                  const EnumerationOptions& opt = {}) {
  model.require_certified("contour_probability");
  ens.validate(model);
  for (const auto& x : gamma.interior)
    if (!ens.box.contains(x)) return 0.0;
  const ConfigurationSweep sweep(model, ens.box, ens.exterior, opt.budget);
  std::vector<std::uint32_t> target;
  for (const auto& ms : gamma.marked_sites())
    target.push_back(static_cast<std::uint32_t>(ens.box.index_of(ms.site)) * static_cast<std::uint32_t>(model.q()) +
                     static_cast<std::uint32_t>(ms.mark - 1));
  struct Partial {
    CompensatedSum z, hit;
  };
  auto parts = run_partitioned<Partial>(sweep.count(), opt.workers, [&](std::uint64_t b, std::uint64_t e) {
    Partial p;
    ContourScanner scanner(sweep.frame(), model);
    std::vector<std::uint32_t> key;
    sweep.run(b, e, [&](const ConfigurationSweep::Cursor& cur) {
      const double w = std::exp(-ens.beta * cur.energy);
      p.z.add(w);
      scanner.scan(cur.spins, cur.buffer, ens.exterior);
      for (const auto& comp : scanner.components()) {
        scanner.key(comp, cur.spins, key);
        if (key == target) {
          p.hit.add(w);
          break;
        }
      }
    });
    return p;
  });
  CompensatedSum z, hit;
  for (const auto& p : parts) {
    z.add(p.z);
    hit.add(p.hit);
  }
  return hit.value() / z.value();
}

/// P(some contour has |gamma| >= n) for n = 0..n_max.
inline std::vector<double> contour_size_tail(const Model& model, const FiniteVolumeEnsemble& ens, std::size_t n_max,
                                             const EnumerationOptions& opt = {}) {
  model.require_certified("contour_size_tail");
  ens.validate(model);
  const ConfigurationSweep sweep(model, ens.box, ens.exterior, opt.budget);
  struct Partial {
    CompensatedSum z;
    std::vector<CompensatedSum> tail;
  };
  auto parts = run_partitioned<Partial>(sweep.count(), opt.workers, [&](std::uint64_t b, std::uint64_t e) {
    Partial p;
    p.tail.resize(n_max + 1);
    ContourScanner scanner(sweep.frame(), model);
    sweep.run(b, e, [&](const ConfigurationSweep::Cursor& cur) {
      const double w = std::exp(-ens.beta * cur.energy);
      p.z.add(w);
      scanner.scan(cur.spins, cur.buffer, ens.exterior);
      if (scanner.components().empty()) return;
      std::size_t largest = 0;
      for (const auto& comp : scanner.components()) largest = std::max(largest, comp.imp.size());
      for (std::size_t k = 0; k <= std::min(largest, n_max); ++k) p.tail[k].add(w);
    });
    return p;
  });
  CompensatedSum z;
  std::vector<CompensatedSum> tail(n_max + 1);
  for (const auto& p : parts) {
    z.add(p.z);
    for (std::size_t k = 0; k <= n_max; ++k) tail[k].add(p.tail[k]);
  }
  std::vector<double> out(n_max + 1);
  for (std::size_t k = 0; k <= n_max; ++k) out[k] = tail[k].value() / z.value();
  return out;
}

struct TrendReport {
  std::vector<double> betas;
  std::vector<double> values;
  bool strictly_decreasing = false;
  /// Strictly decreasing from the largest value onward.
  bool decreasing_after_peak = false;
};

/// mu^(i)(sigma(x) = j) along an ascending beta grid.
inline TrendReport marginal_trend(const Model& model, const Box& box, const Site& x, Spin i, Spin j,
                                  std::span<const double> betas, const EnumerationOptions& opt = {}) {
  if (i == j) throw InputError("marginal_trend: j must differ from the exterior spin");
  if (j < 1 || j > model.q()) throw InputError("marginal_trend: spin j outside 1..q");
  if (!box.contains(x)) throw InputError("marginal_trend: site outside the box");
  if (!std::is_sorted(betas.begin(), betas.end())) throw InputError("marginal_trend: beta grid must ascend");
  TrendReport rep;
  for (double beta : betas) {
    const auto dist = enumerate_distribution(model, {box, i, beta}, opt);
    rep.betas.push_back(beta);
    rep.values.push_back(dist.marginal(x, j));
  }
  auto strict = [](auto first, auto last) {
    for (auto it = first; it != last && std::next(it) != last; ++it)
      if (!(*std::next(it) < *it)) return false;
    return true;
  };
  rep.strictly_decreasing = strict(rep.values.begin(), rep.values.end());
  const auto peak = std::max_element(rep.values.begin(), rep.values.end());
  rep.decreasing_after_peak = strict(peak, rep.values.end());
  return rep;
}

struct GapRow {
  double beta = 0.0;
  /// mu^(1)(sigma(x)=1), mu^(2)(sigma(x)=1), mu^(1)(sigma(x)=2)
  double mu11 = 0.0, mu21 = 0.0, mu12 = 0.0;
  double gap = 0.0;
  /// |mu^(2)(sigma(x)=1) - mu^(1)(sigma(x)=2)|, zero for symmetric models.
  double permutation_residual = 0.0;
};

/// g(beta) = mu^(1)(sigma(x)=1) - mu^(2)(sigma(x)=1) for each beta.
inline std::vector<GapRow> coexistence_gap(const Model& model, const Box& box, const Site& x,
                                           std::span<const double> betas, const EnumerationOptions& opt = {}) {
  model.require_certified("coexistence_gap");
  if (!model.symmetric()) throw PreconditionError("coexistence_gap: model is not spin-permutation symmetric");
  if (model.s() < 2) throw PreconditionError("coexistence_gap: needs at least two ground states");
  if (!box.contains(x)) throw InputError("coexistence_gap: site outside the box");
  std::vector<GapRow> rows;
  for (double beta : betas) {
    const auto d1 = enumerate_distribution(model, {box, 1, beta}, opt);
    const auto d2 = enumerate_distribution(model, {box, 2, beta}, opt);
    GapRow row;
    row.beta = beta;
    row.mu11 = d1.marginal(x, 1);
    row.mu12 = d1.marginal(x, 2);
    row.mu21 = d2.marginal(x, 1);
    row.gap = row.mu11 - row.mu21;
    row.permutation_residual = std::abs(row.mu21 - row.mu12);
    rows.push_back(row);
  }
  return rows;
}

/// Finite-volume DLR check: the ensemble's marginal on `subbox` against the
/// mixture, over configurations omega of box \ subbox, of the conditional
/// Gibbs distribution on subbox given omega (and the exterior beyond the
/// box). Returns the largest absolute discrepancy over subbox patterns.
inline double dlr_consistency(const Model& model, const FiniteVolumeEnsemble& ens, const Box& subbox,
                              const EnumerationOptions& opt = {}) {
  ens.validate(model);
  if (!ens.box.contains(subbox)) throw InputError("dlr_consistency: subbox not contained in the box");
  const std::size_t n = ens.box.size();
  const auto q = static_cast<std::uint64_t>(model.q());
  const auto total = saturating_pow(q, n);
  if (total > opt.budget) throw CapacityError("configuration space of box " + ens.box.to_string(), total, opt.budget);

  std::vector<std::size_t> inner, outer;
  for (std::size_t i = 0; i < n; ++i) (subbox.contains(ens.box.site_at(i)) ? inner : outer).push_back(i);
  const auto n_inner = saturating_pow(q, inner.size());
  const auto n_outer = saturating_pow(q, outer.size());

  const BoxFrame full(ens.box, model.r(), model.q());
  const BoxFrame sub(subbox, model.r(), model.q());
  const Box& sub_padded = sub.padded_box();

  Configuration c = Configuration::uniform(ens.box, ens.exterior);
  auto assign = [&](const std::vector<std::size_t>& sites, std::uint64_t code) {
    for (std::size_t k = sites.size(); k-- > 0;) {
      c.spins[sites[k]] = static_cast<Spin>(code % q) + 1;
      code /= q;
    }
  };
  auto full_energy = [&] {
    const auto buf = full.make_buffer(c);
    double e = 0.0;
    for (std::size_t b = 0; b < full.cube_count(); ++b) e += model.relative(full.cube_code(buf, b));
    return e;
  };
  // Conditional energy on the subbox: cubes meeting the subbox, sites outside
  // it read from omega inside the box and the exterior beyond.
  auto sub_energy = [&] {
    std::vector<Spin> buf(sub_padded.size());
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = c.at(sub_padded.site_at(k));
    double e = 0.0;
    for (std::size_t b = 0; b < sub.cube_count(); ++b) e += model.relative(sub.cube_code(buf, b));
    return e;
  };

  std::vector<double> joint(n_inner * n_outer), cond(n_inner * n_outer);
  double e_min = std::numeric_limits<double>::infinity();
  for (std::uint64_t w = 0; w < n_outer; ++w) {
    assign(outer, w);
    for (std::uint64_t s = 0; s < n_inner; ++s) {
      assign(inner, s);
      joint[w * n_inner + s] = full_energy();
      cond[w * n_inner + s] = sub_energy();
      e_min = std::min(e_min, joint[w * n_inner + s]);
    }
  }
  CompensatedSum z;
  for (auto& e : joint) {
    e = std::exp(-ens.beta * (e - e_min));
    z.add(e);
  }
  std::vector<CompensatedSum> marginal(n_inner), mixture(n_inner);
  for (std::uint64_t w = 0; w < n_outer; ++w) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < n_inner; ++s) lo = std::min(lo, cond[w * n_inner + s]);
    CompensatedSum mu_omega, z_cond;
    std::vector<double> nu(n_inner);
    for (std::uint64_t s = 0; s < n_inner; ++s) {
      const double p = joint[w * n_inner + s] / z.value();
      mu_omega.add(p);
      marginal[s].add(p);
      nu[s] = std::exp(-ens.beta * (cond[w * n_inner + s] - lo));
      z_cond.add(nu[s]);
    }
    for (std::uint64_t s = 0; s < n_inner; ++s) mixture[s].add(mu_omega.value() * nu[s] / z_cond.value());
  }
  double worst = 0.0;
  for (std::uint64_t s = 0; s < n_inner; ++s)
    worst = std::max(worst, std::abs(marginal[s].value() - mixture[s].value()));
  return worst;
}

}  // namespace pscontour
