// Umbrella header.
#pragma once

#include "deltasum/bench.hpp"
#include "deltasum/core.hpp"
#include "deltasum/engine.hpp"
#include "deltasum/sqlgen.hpp"
#include "deltasum/workload.hpp"
