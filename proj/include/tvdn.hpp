#pragma once

#include "tvdn/bench.hpp"
#include "tvdn/dct.hpp"
#include "tvdn/error.hpp"
#include "tvdn/extreme_value.hpp"
#include "tvdn/grid.hpp"
#include "tvdn/io.hpp"
#include "tvdn/lambda.hpp"
#include "tvdn/maxflow.hpp"
#include "tvdn/normal.hpp"
#include "tvdn/parallel.hpp"
#include "tvdn/risk.hpp"
#include "tvdn/segmentation.hpp"
#include "tvdn/selection.hpp"
#include "tvdn/signals.hpp"
#include "tvdn/tv_solve.hpp"
