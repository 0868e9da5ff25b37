#pragma once

#include "swd/analytics.hpp"
#include "swd/core.hpp"
#include "swd/engine.hpp"
#include "swd/ids.hpp"
#include "swd/routing.hpp"
#include "swd/scenario.hpp"
#include "swd/simulation.hpp"
#include "swd/sweep.hpp"
#include "swd/topology.hpp"
