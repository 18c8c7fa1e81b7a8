#pragma once

#include "svgmppi/core/rng.hpp"
#include "svgmppi/core/sampling.hpp"
#include "svgmppi/core/solver.hpp"
#include "svgmppi/core/types.hpp"
#include "svgmppi/core/weights.hpp"
#include "svgmppi/control/controller.hpp"
#include "svgmppi/guide/gaussian_fit.hpp"
#include "svgmppi/guide/svgd.hpp"
#include "svgmppi/harness/config.hpp"
#include "svgmppi/harness/persist.hpp"
#include "svgmppi/harness/scenario.hpp"
#include "svgmppi/sim/costmap.hpp"
#include "svgmppi/sim/tracking_cost.hpp"
#include "svgmppi/sim/vehicle.hpp"
#include "svgmppi/sim/waypoints.hpp"
#include "svgmppi/version.hpp"
