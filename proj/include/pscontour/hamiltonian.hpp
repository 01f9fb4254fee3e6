#pragma once

// Conditional and relative Hamiltonians of box configurations, and the
// Peierls-condition check H(sigma, phi) >= lambda0 * |boundary(sigma)|.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pscontour/configuration.hpp"
#include "pscontour/contour.hpp"
#include "pscontour/model.hpp"

namespace pscontour {

/// Sum over cubes meeting the box of U(sigma_b) - U^min, exterior sites
/// reading as the exterior spin. Nonnegative; zero iff every cube is minimal.
inline double conditional_hamiltonian(const Configuration& config, const Model& model) {
  config.validate(model.spec());
  const BoxFrame frame(config.box, model.r(), model.q());
  const auto buf = frame.make_buffer(config);
  double e = 0.0;
  for (std::size_t c = 0; c < frame.cube_count(); ++c) e += model.relative(frame.cube_code(buf, c));
  return e;
}

/// Sum over cubes meeting the box of U(sigma_b), without the U^min offset.
inline double absolute_conditional_hamiltonian(const Configuration& config, const Model& model) {
  config.validate(model.spec());
  const BoxFrame frame(config.box, model.r(), model.q());
  const auto buf = frame.make_buffer(config);
  double e = 0.0;
  for (std::size_t c = 0; c < frame.cube_count(); ++c) e += model.potential()[frame.cube_code(buf, c)];
  return e;
}

/// H(sigma, phi) = sum_b (U(sigma_b) - U(phi_b)) for a configuration equal
/// to the constant phi outside its box.
inline double relative_hamiltonian(const Configuration& sigma, Spin phi, const Model& model) {
  if (!model.is_ground_spin(phi))
    throw InputError("relative_hamiltonian: spin " + std::to_string(phi) + " is not a certified ground state");
  if (sigma.exterior != phi)
    throw InputError("relative_hamiltonian: configuration exterior differs from the reference ground state");
  sigma.validate(model.spec());
  const BoxFrame frame(sigma.box, model.r(), model.q());
  const auto buf = frame.make_buffer(sigma);
  const double u_phi = model.potential()[model.potential().codec().constant_code(phi)];
  double e = 0.0;
  for (std::size_t c = 0; c < frame.cube_count(); ++c) e += model.potential()[frame.cube_code(buf, c)] - u_phi;
  return e;
}

struct PeierlsReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  /// min over samples with nonempty boundary of H / (lambda0 |boundary|).
  double tightest_ratio = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> violating_samples;
  bool passed() const noexcept { return violations == 0; }
};

inline PeierlsReport verify_peierls(const Model& model, std::span<const Configuration> samples,
                                    double slack = 1e-12) {
  model.require_certified("verify_peierls");
  model.require_gapped("verify_peierls");
  PeierlsReport rep;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& sigma = samples[k];
    const double h = relative_hamiltonian(sigma, sigma.exterior, model);
    const auto nb = static_cast<double>(boundary(sigma, model).size());
    ++rep.checked;
    if (h < model.lambda0() * nb - slack) {
      ++rep.violations;
      rep.violating_samples.push_back(k);
    }
    if (nb > 0) rep.tightest_ratio = std::min(rep.tightest_ratio, h / (model.lambda0() * nb));
  }
  return rep;
}

}  // namespace pscontour
