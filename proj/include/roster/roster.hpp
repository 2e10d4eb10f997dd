#pragma once

// Umbrella header.

#include "roster/core.hpp"
#include "roster/model.hpp"
#include "roster/io.hpp"
#include "roster/random.hpp"
#include "roster/instance_gen.hpp"
#include "roster/exact.hpp"
#include "roster/channel.hpp"
#include "roster/improve.hpp"
#include "roster/ga.hpp"
#include "roster/stats.hpp"
#include "roster/harness.hpp"
