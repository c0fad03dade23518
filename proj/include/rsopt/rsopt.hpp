/// Umbrella header for the response-surface stochastic optimization library.
#pragma once

#include "rsopt/linalg.hpp"
#include "rsopt/model.hpp"
#include "rsopt/fit.hpp"
#include "rsopt/normal.hpp"
#include "rsopt/programs.hpp"
#include "rsopt/solve.hpp"
#include "rsopt/io.hpp"
#include "rsopt/cli.hpp"
