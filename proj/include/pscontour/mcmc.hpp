#pragma once

// Single-site Markov chains for box ensembles too large to enumerate.
// One sweep visits every box site once in a random order; each visit
// resamples the site from its conditional distribution (heat bath) or makes
// a Metropolis proposal. Energy changes only involve the cubes containing
// the site. All randomness comes from Philox keyed by (seed, sweep, slot).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pscontour/census.hpp"
#include "pscontour/configuration.hpp"
#include "pscontour/contour.hpp"
#include "pscontour/exact_gibbs.hpp"
#include "pscontour/model.hpp"
#include "pscontour/rng.hpp"

namespace pscontour {

enum class UpdateRule { heat_bath, metropolis };

struct ChainSpec {
  FiniteVolumeEnsemble ensemble;
  std::uint64_t seed = 1;
  std::uint64_t burn_in = 1000;
  std::uint64_t samples = 10000;
  std::uint64_t thinning = 1;
  UpdateRule rule = UpdateRule::heat_bath;
  std::uint32_t replica = 0;
  std::size_t batches = 32;

  void validate(const Model& model) const {
    ensemble.validate(model);
    if (burn_in < 1 || samples < 1) throw InputError("chain: burn_in and samples must be at least 1");
    if (thinning < 1 || thinning > samples) throw InputError("chain: thinning must lie in 1..samples");
    if (batches < 2) throw InputError("chain: need at least two batches");
  }
};

struct Observable {
  enum class Kind { site_spin, energy, boundary_size, contour_tail };
  Kind kind = Kind::energy;
  Site site;
  Spin spin = 1;
  std::size_t threshold = 0;

  static Observable site_spin(Site x, Spin j) { return {Kind::site_spin, std::move(x), j, 0}; }
  static Observable energy() { return {Kind::energy, {}, 1, 0}; }
  static Observable boundary_size() { return {Kind::boundary_size, {}, 1, 0}; }
  /// Indicator that some contour has |gamma| >= n.
  static Observable contour_tail(std::size_t n) { return {Kind::contour_tail, {}, 1, n}; }

  std::string name() const {
    switch (kind) {
      case Kind::site_spin: return "P[s" + site.to_string() + "=" + std::to_string(spin) + "]";
      case Kind::energy: return "energy";
      case Kind::boundary_size: return "boundary_size";
      case Kind::contour_tail: return "P[max_contour>=" + std::to_string(threshold) + "]";
    }
    return "?";
  }
};

struct Estimate {
  std::string name;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t records = 0;
};

struct ChainResult {
  std::vector<Estimate> estimates;
  Configuration final_state;
  /// Per-record observable values, when requested.
  std::vector<std::vector<double>> trace;
};

/// Mean and batch-means standard error; a trailing remainder that does not
/// fill a batch is dropped from the error estimate only.
inline Estimate batch_means(std::string name, std::span<const double> xs, std::size_t batches) {
  Estimate est;
  est.name = std::move(name);
  est.records = xs.size();
  if (xs.empty()) return est;
  CompensatedSum total;
  for (double x : xs) total.add(x);
  est.mean = total.value() / static_cast<double>(xs.size());
  batches = std::min(batches, xs.size());
  if (batches < 2) return est;
  const std::size_t per = xs.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    CompensatedSum s;
    for (std::size_t k = 0; k < per; ++k) s.add(xs[b * per + k]);
    means[b] = s.value() / static_cast<double>(per);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= static_cast<double>(batches - 1);
  est.std_error = std::sqrt(var / static_cast<double>(batches));
  return est;
}

class Chain {
 public:
  Chain(const Model& model, ChainSpec spec)
      : model_(&model),
        spec_(std::move(spec)),
        frame_(spec_.ensemble.box, model.r(), model.q()),
        rng_(spec_.seed),
        state_(Configuration::uniform(spec_.ensemble.box, spec_.ensemble.exterior)) {
    model.require_certified("run_chain");
    spec_.validate(model);
    buffer_ = frame_.make_buffer(state_);
    codes_.resize(frame_.cube_count());
    for (std::size_t c = 0; c < codes_.size(); ++c) codes_[c] = frame_.cube_code(buffer_, c);
    order_.resize(frame_.site_count());
  }

  const Configuration& state() const noexcept { return state_; }
  const BoxFrame& frame() const noexcept { return frame_; }
  std::uint64_t sweeps_done() const noexcept { return sweep_; }

  /// Replaces the current configuration (same box and exterior).
  void set_state(const Configuration& c) {
    frame_.check_compatible(c);
    if (c.exterior != state_.exterior) throw InputError("chain: exterior spin cannot change");
    c.validate(model_->spec());
    state_ = c;
    buffer_ = frame_.make_buffer(state_);
    for (std::size_t c2 = 0; c2 < codes_.size(); ++c2) codes_[c2] = frame_.cube_code(buffer_, c2);
  }

  /// Relative energy of the current state, summed over all cubes.
  double energy() const {
    double e = 0.0;
    for (auto code : codes_) e += model_->relative(code);
    return e;
  }

  /// Energy change if box site i took spin v; touches only its cubes.
  double local_delta(std::size_t i, Spin v) const {
    const Spin old = state_.spins[i];
    if (v == old) return 0.0;
    const auto cubes = frame_.cubes_of_site(i);
    const auto& codec = frame_.codec();
    double delta = 0.0;
    for (std::size_t m = 0; m < cubes.size(); ++m) {
      const auto code = codes_[cubes[m]];
      const auto moved = code + static_cast<std::uint64_t>(v - 1) * codec.weight(m) -
                         static_cast<std::uint64_t>(old - 1) * codec.weight(m);
      delta += model_->relative(moved) - model_->relative(code);
    }
    return delta;
  }

  /// Conditional law of site i given the rest: p_v proportional to
  /// exp(-beta * delta_v).
  std::vector<double> heat_bath_probabilities(std::size_t i) const {
    const auto q = static_cast<std::size_t>(model_->q());
    std::vector<double> delta(q);
    for (std::size_t v = 0; v < q; ++v) delta[v] = local_delta(i, static_cast<Spin>(v + 1));
    const double lo = *std::min_element(delta.begin(), delta.end());
    std::vector<double> p(q);
    double z = 0.0;
    for (std::size_t v = 0; v < q; ++v) z += p[v] = std::exp(-spec_.ensemble.beta * (delta[v] - lo));
    for (auto& x : p) x /= z;
    return p;
  }

  void set_site(std::size_t i, Spin v) {
    const Spin old = state_.spins[i];
    if (v == old) return;
    const auto cubes = frame_.cubes_of_site(i);
    const auto& codec = frame_.codec();
    for (std::size_t m = 0; m < cubes.size(); ++m)
      codes_[cubes[m]] = codes_[cubes[m]] + static_cast<std::uint64_t>(v - 1) * codec.weight(m) -
                         static_cast<std::uint64_t>(old - 1) * codec.weight(m);
    state_.spins[i] = v;
    buffer_[frame_.padded_index(i)] = v;
  }

  void sweep() {
    const std::size_t n = frame_.site_count();
    const std::uint32_t tag = spec_.replica << 2;
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) {
      const double u = rng_.uniform(sweep_, static_cast<std::uint32_t>(k), tag | kPermutationStream);
      const auto j = static_cast<std::size_t>(u * static_cast<double>(k));
      std::swap(order_[k - 1], order_[std::min(j, k - 1)]);
    }
    for (auto i : order_) {
      const auto u = rng_.uniform2(sweep_, static_cast<std::uint32_t>(i), tag | kUpdateStream);
      if (spec_.rule == UpdateRule::heat_bath) {
        const auto p = heat_bath_probabilities(i);
        double acc = 0.0;
        Spin pick = model_->q();
        for (std::size_t v = 0; v < p.size(); ++v) {
          acc += p[v];
          if (u[0] < acc) {
            pick = static_cast<Spin>(v + 1);
            break;
          }
        }
        set_site(i, pick);
      } else {
        if (model_->q() < 2) continue;
        auto offset = static_cast<Spin>(u[0] * (model_->q() - 1));
        offset = std::min(offset, model_->q() - 2);
        const Spin proposal = (state_.spins[i] - 1 + 1 + offset) % model_->q() + 1;
        const double delta = local_delta(i, proposal);
        if (delta <= 0.0 || u[1] < std::exp(-spec_.ensemble.beta * delta)) set_site(i, proposal);
      }
    }
    ++sweep_;
  }

  /// Observable values on the current state.
  std::vector<double> measure(std::span<const Observable> obs) {
    std::vector<double> out;
    out.reserve(obs.size());
    bool need_scan = false;
    for (const auto& o : obs)
      need_scan |= o.kind == Observable::Kind::boundary_size || o.kind == Observable::Kind::contour_tail;
    std::size_t largest = 0;
    std::size_t boundary = 0;
    if (need_scan) {
      if (!scanner_) scanner_.emplace(frame_, *model_);
      scanner_->scan(state_.spins, buffer_, state_.exterior);
      boundary = scanner_->boundary_size();
      for (const auto& comp : scanner_->components()) largest = std::max(largest, comp.imp.size());
    }
    const bool any_contour = need_scan && !scanner_->components().empty();
    for (const auto& o : obs) {
      switch (o.kind) {
        case Observable::Kind::site_spin:
          out.push_back(state_.at(o.site) == o.spin ? 1.0 : 0.0);
          break;
        case Observable::Kind::energy:
          out.push_back(energy());
          break;
        case Observable::Kind::boundary_size:
          out.push_back(static_cast<double>(boundary));
          break;
        case Observable::Kind::contour_tail:
          out.push_back(any_contour && largest >= o.threshold ? 1.0 : 0.0);
          break;
      }
    }
    return out;
  }

 private:
  static constexpr std::uint32_t kPermutationStream = 1;
  static constexpr std::uint32_t kUpdateStream = 2;

  const Model* model_;
  ChainSpec spec_;
  BoxFrame frame_;
  Philox4x32 rng_;
  Configuration state_;
  std::vector<Spin> buffer_;
  std::vector<std::uint64_t> codes_;
  std::vector<std::size_t> order_;
  std::optional<ContourScanner> scanner_;
  std::uint64_t sweep_ = 0;
};

/// Runs burn-in, then records the observables every `thinning` sweeps over
/// `samples` sweeps; returns means with batch-means standard errors.
inline ChainResult run_chain(const Model& model, const ChainSpec& spec, std::span<const Observable> obs,
                             bool record_trace = false) {
  for (const auto& o : obs)
    if (o.kind == Observable::Kind::site_spin && !spec.ensemble.box.contains(o.site))
      throw InputError("observable site " + o.site.to_string() + " outside the box");
  Chain chain(model, spec);
  for (std::uint64_t s = 0; s < spec.burn_in; ++s) chain.sweep();
  std::vector<std::vector<double>> series(obs.size());
  ChainResult res;
  for (std::uint64_t s = 1; s <= spec.samples; ++s) {
    chain.sweep();
    if (s % spec.thinning != 0) continue;
    const auto values = chain.measure(obs);
    for (std::size_t k = 0; k < obs.size(); ++k) series[k].push_back(values[k]);
    if (record_trace) res.trace.push_back(values);
  }
  for (std::size_t k = 0; k < obs.size(); ++k) res.estimates.push_back(batch_means(obs[k].name(), series[k], spec.batches));
  res.final_state = chain.state();
  return res;
}

/// Independent replicas (replica id r uses its own Philox stream) run on up
/// to `workers` threads; estimates are averaged in replica order.
inline std::vector<Estimate> run_replicas(const Model& model, const ChainSpec& spec, std::span<const Observable> obs,
                                          std::uint32_t replicas, unsigned workers = 1) {
  if (replicas < 1) throw InputError("run_replicas: need at least one replica");
  std::vector<ChainResult> results(replicas);
  auto parts = run_partitioned<int>(replicas, workers, [&](std::uint64_t b, std::uint64_t e) {
    for (auto k = b; k < e; ++k) {
      ChainSpec s = spec;
      s.replica = spec.replica + static_cast<std::uint32_t>(k);
      results[k] = run_chain(model, s, obs);
    }
    return 0;
  });
  (void)parts;
  std::vector<Estimate> out;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    Estimate e;
    e.name = obs[k].name();
    double var = 0.0;
    for (const auto& r : results) {
      e.mean += r.estimates[k].mean;
      var += r.estimates[k].std_error * r.estimates[k].std_error;
      e.records += r.estimates[k].records;
    }
    e.mean /= replicas;
    e.std_error = std::sqrt(var) / replicas;
    out.push_back(e);
  }
  return out;
}

/// Frequencies of "some contour has |gamma| >= n", n = 0..n_max.
inline std::vector<Estimate> estimate_contour_size_tail(const Model& model, const ChainSpec& spec, std::size_t n_max) {
  std::vector<Observable> obs;
  for (std::size_t n = 0; n <= n_max; ++n) obs.push_back(Observable::contour_tail(n));
  return run_chain(model, spec, obs).estimates;
}

/// Union-bound envelope for P(some contour has |gamma| >= n) on a box of
/// `sites` sites: sites * sum_{m >= n} N_m e^{-beta lambda0 m}, with N_m the
/// exact rooted contour count where `counts` has it (counts[m-1] = N_m) and
/// (1/2)(4ek)^m beyond. Infinite when the tail series diverges.
inline double tail_envelope(const Model& model, std::size_t sites, double beta, std::size_t n,
                            std::span<const std::uint64_t> counts) {
  const double decay = std::exp(-beta * model.lambda0());
  const double rho = 4.0 * std::numbers::e * static_cast<double>(max_degree(model.d(), model.r())) * decay;
  const std::size_t first = std::max<std::size_t>(n, 1);
  double sum = 0.0;
  for (std::size_t m = first; m <= counts.size(); ++m)
    sum += static_cast<double>(counts[m - 1]) * std::pow(decay, static_cast<double>(m));
  const std::size_t tail_from = std::max(first, counts.size() + 1);
  if (rho >= 1.0) return std::numeric_limits<double>::infinity();
  sum += 0.5 * std::pow(rho, static_cast<double>(tail_from)) / (1.0 - rho);
  return static_cast<double>(sites) * sum;
}

}  // namespace pscontour
