#pragma once

#include "netenv/agents.hpp"
#include "netenv/config.hpp"
#include "netenv/environment.hpp"
#include "netenv/envdist.hpp"
#include "netenv/error.hpp"
#include "netenv/genprog.hpp"
#include "netenv/harness.hpp"
#include "netenv/learner.hpp"
#include "netenv/netmodel.hpp"
#include "netenv/rng.hpp"
#include "netenv/scenario.hpp"
