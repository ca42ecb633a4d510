#pragma once

#include "missboopf/error.hpp"
#include "missboopf/datamodel.hpp"
#include "missboopf/rngdist.hpp"
#include "missboopf/cart.hpp"
#include "missboopf/resampling.hpp"
#include "missboopf/forest.hpp"
#include "missboopf/boosting.hpp"
#include "missboopf/imputer.hpp"
#include "missboopf/ampute.hpp"
#include "missboopf/metrics.hpp"
#include "missboopf/synthdata.hpp"
#include "missboopf/benchmark.hpp"
