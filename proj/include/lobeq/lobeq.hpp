#pragma once

#include "lobeq/config.hpp"
#include "lobeq/csv.hpp"
#include "lobeq/equilibrium.hpp"
#include "lobeq/inelastic.hpp"
#include "lobeq/market.hpp"
#include "lobeq/queue.hpp"
#include "lobeq/simulator.hpp"
#include "lobeq/stats.hpp"
