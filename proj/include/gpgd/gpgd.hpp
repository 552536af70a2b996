#pragma once

// Umbrella header.

#include "gpgd/contraction.hpp"
#include "gpgd/core.hpp"
#include "gpgd/estimators.hpp"
#include "gpgd/generator.hpp"
#include "gpgd/io.hpp"
#include "gpgd/objective.hpp"
#include "gpgd/projection.hpp"
#include "gpgd/solver.hpp"
