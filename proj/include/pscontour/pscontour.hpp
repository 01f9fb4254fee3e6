#pragma once

#include "pscontour/error.hpp"
#include "pscontour/lattice.hpp"
#include "pscontour/model.hpp"
#include "pscontour/configuration.hpp"
#include "pscontour/contour.hpp"
#include "pscontour/hamiltonian.hpp"
#include "pscontour/exact_gibbs.hpp"
#include "pscontour/census.hpp"
#include "pscontour/rng.hpp"
#include "pscontour/mcmc.hpp"
#include "pscontour/io.hpp"
