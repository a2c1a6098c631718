#pragma once

#include "frontier_dyn/util.hpp"
#include "frontier_dyn/panel_data.hpp"
#include "frontier_dyn/lp_solver.hpp"
#include "frontier_dyn/dea_core.hpp"
#include "frontier_dyn/partition_heuristic.hpp"
#include "frontier_dyn/clustering.hpp"
#include "frontier_dyn/sensitivity.hpp"
