#pragma once

// Umbrella header for the whole library.

#include "dpsc/accountant.hpp"
#include "dpsc/config.hpp"
#include "dpsc/csv.hpp"
#include "dpsc/dataset.hpp"
#include "dpsc/errors.hpp"
#include "dpsc/experiment.hpp"
#include "dpsc/io.hpp"
#include "dpsc/loss.hpp"
#include "dpsc/metrics.hpp"
#include "dpsc/noise.hpp"
#include "dpsc/objective.hpp"
#include "dpsc/penalty.hpp"
#include "dpsc/rng.hpp"
#include "dpsc/solver.hpp"
#include "dpsc/stats.hpp"
#include "dpsc/synth.hpp"
