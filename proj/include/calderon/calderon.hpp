#pragma once

#include "calderon/error.hpp"
#include "calderon/grid_function.hpp"
#include "calderon/numerics.hpp"
#include "calderon/sturm.hpp"
#include "calderon/geometry.hpp"
#include "calderon/deform.hpp"
#include "calderon/yamabe.hpp"
#include "calderon/dnmap.hpp"
#include "calderon/harness/config.hpp"
#include "calderon/harness/cache.hpp"
#include "calderon/harness/report.hpp"
#include "calderon/harness/scenarios.hpp"
