#pragma once

#include "rbc/bounds.hpp"
#include "rbc/config.hpp"
#include "rbc/criteria.hpp"
#include "rbc/engine.hpp"
#include "rbc/io.hpp"
#include "rbc/montecarlo.hpp"
#include "rbc/rng.hpp"
#include "rbc/simplex.hpp"
