#pragma once

#include "cwexit/errors.hpp"
#include "cwexit/model.hpp"
#include "cwexit/normal.hpp"
#include "cwexit/quadrature.hpp"
#include "cwexit/rng.hpp"
#include "cwexit/sim.hpp"
#include "cwexit/stats.hpp"
#include "cwexit/theory.hpp"
