// Walks through the library on the Ising model: spectrum, one contour, and
// its exact probability in a 3x3 box against exp(-beta lambda0 |gamma|).

#include <cmath>
#include <iostream>

#include "pscontour/pscontour.hpp"

int main() {
  using namespace pscontour;
  const Model model(builtin::ising());
  std::cout << "U_min = " << model.u_min() << ", lambda0 = " << model.lambda0()
            << ", certified = " << model.certified() << '\n';

  const Box box = Box::centered(2, 3);
  auto sigma = Configuration::uniform(box, 1);
  sigma.set({0, 0}, 2);
  sigma.set({0, 1}, 2);
  const auto gamma = contours(sigma, model).front();
  std::cout << "contour " << gamma.to_string() << " has |gamma| = " << gamma.size()
            << ", H = " << conditional_hamiltonian(sigma, model) << '\n';

  for (double beta : {0.5, 1.0, 2.0}) {
    const double p = contour_probability(model, {box, 1, beta}, gamma);
    std::cout << "beta = " << beta << ": p(gamma) = " << p
              << " <= " << std::exp(-beta * model.lambda0() * static_cast<double>(gamma.size())) << '\n';
  }
  return 0;
}
