#pragma once

// Umbrella header for the large-deviations thermodynamics toolkit.

#include "ldt/action.hpp"
#include "ldt/density.hpp"
#include "ldt/eit.hpp"
#include "ldt/errors.hpp"
#include "ldt/expr.hpp"
#include "ldt/fpe.hpp"
#include "ldt/grid.hpp"
#include "ldt/hamjac.hpp"
#include "ldt/io.hpp"
#include "ldt/linalg.hpp"
#include "ldt/model.hpp"
#include "ldt/ou.hpp"
#include "ldt/rng.hpp"
#include "ldt/sde.hpp"
#include "ldt/thermo.hpp"
#include "ldt/version.hpp"
