#ifndef RELSA_RELSA_HPP
#define RELSA_RELSA_HPP

// Umbrella header for the reliability sensitivity analysis library.

#include "relsa/baselines.hpp"
#include "relsa/common.hpp"
#include "relsa/distributions.hpp"
#include "relsa/estimation.hpp"
#include "relsa/models.hpp"
#include "relsa/perturbation.hpp"
#include "relsa/quadrature.hpp"
#include "relsa/rng.hpp"
#include "relsa/special_functions.hpp"
#include "relsa/study.hpp"

#endif
