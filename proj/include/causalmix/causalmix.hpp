#pragma once

// Umbrella header: discrete causal Bayesian networks, mixtures of perfect
// interventions, and recovery of the generating intervention tuples from
// exact oracles or finite samples.

#include "causalmix/benchgen.hpp"
#include "causalmix/cbn.hpp"
#include "causalmix/disentangle.hpp"
#include "causalmix/errors.hpp"
#include "causalmix/estimate.hpp"
#include "causalmix/intervene.hpp"
#include "causalmix/json_io.hpp"
#include "causalmix/oracle.hpp"
#include "causalmix/rng.hpp"
#include "causalmix/scalar.hpp"
#include "causalmix/solver.hpp"

namespace causalmix {

inline constexpr const char* kVersion = "0.1.0";

} // namespace causalmix
