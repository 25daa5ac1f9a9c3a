#pragma once

#include "sokorl/a2c.hpp"
#include "sokorl/deadlock.hpp"
#include "sokorl/engine.hpp"
#include "sokorl/errors.hpp"
#include "sokorl/generate.hpp"
#include "sokorl/harness.hpp"
#include "sokorl/heuristic.hpp"
#include "sokorl/level.hpp"
#include "sokorl/net.hpp"
#include "sokorl/planner.hpp"
#include "sokorl/shaping.hpp"
#include "sokorl/xsb.hpp"
