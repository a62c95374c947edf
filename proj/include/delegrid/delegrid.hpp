#pragma once

#include "delegrid/charts.hpp"
#include "delegrid/delegation.hpp"
#include "delegrid/errors.hpp"
#include "delegrid/experiments.hpp"
#include "delegrid/gridworld.hpp"
#include "delegrid/ibl.hpp"
#include "delegrid/io.hpp"
#include "delegrid/nav_agents.hpp"
#include "delegrid/parallel.hpp"
#include "delegrid/rng.hpp"
#include "delegrid/simulation.hpp"
