#pragma once

#include "designbench/assignment.hpp"
#include "designbench/errors.hpp"
#include "designbench/estimators.hpp"
#include "designbench/montecarlo.hpp"
#include "designbench/oracle.hpp"
#include "designbench/population.hpp"
#include "designbench/rational.hpp"
#include "designbench/rng.hpp"
#include "designbench/serialization.hpp"
