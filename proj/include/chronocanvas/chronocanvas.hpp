#pragma once

// Umbrella header: the whole chronology-aware canvas engine.

#include "chronocanvas/core.hpp"
#include "chronocanvas/graph.hpp"
#include "chronocanvas/chronology.hpp"
#include "chronocanvas/recommend.hpp"
#include "chronocanvas/estimate.hpp"
#include "chronocanvas/repetition.hpp"
#include "chronocanvas/sync.hpp"
#include "chronocanvas/simulate.hpp"
#include "chronocanvas/json_io.hpp"
