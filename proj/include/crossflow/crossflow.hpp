#pragma once

// Umbrella header for the crossflow library: a deterministic pedestrian
// simulator over a three-way crossroad, Gaussian density heatmaps for camera
// cutouts, from-scratch random-forest regressors that predict the destination
// distribution from a single heatmap, and the evaluation/sweep harness around
// them.

#include "crossflow/config.hpp"
#include "crossflow/csv.hpp"
#include "crossflow/errors.hpp"
#include "crossflow/experiments.hpp"
#include "crossflow/floor_field.hpp"
#include "crossflow/forest.hpp"
#include "crossflow/format.hpp"
#include "crossflow/geometry.hpp"
#include "crossflow/heatmap.hpp"
#include "crossflow/manifest.hpp"
#include "crossflow/metrics.hpp"
#include "crossflow/parallel.hpp"
#include "crossflow/rng.hpp"
#include "crossflow/scenario.hpp"
#include "crossflow/simulation.hpp"
#include "crossflow/version.hpp"
