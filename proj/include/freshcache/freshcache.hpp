#pragma once

// Umbrella header for the whole toolkit.

#include "freshcache/analysis.hpp"
#include "freshcache/coupon.hpp"
#include "freshcache/experiment.hpp"
#include "freshcache/model.hpp"
#include "freshcache/policy.hpp"
#include "freshcache/rng.hpp"
#include "freshcache/simulator.hpp"
#include "freshcache/version.hpp"
