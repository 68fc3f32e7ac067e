#pragma once

#include "hiresim/experiments.hpp"
#include "hiresim/io.hpp"
#include "hiresim/laws.hpp"
#include "hiresim/profile.hpp"
#include "hiresim/rng.hpp"
#include "hiresim/series.hpp"
#include "hiresim/simulate.hpp"
#include "hiresim/special.hpp"
#include "hiresim/stats.hpp"
#include "hiresim/strategy.hpp"
