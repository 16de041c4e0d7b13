#pragma once

#include "isac/dp_select.hpp"
#include "isac/error.hpp"
#include "isac/inner_solver.hpp"
#include "isac/metrics.hpp"
#include "isac/model.hpp"
#include "isac/scenario_io.hpp"
#include "isac/search.hpp"
#include "isac/sweep.hpp"
