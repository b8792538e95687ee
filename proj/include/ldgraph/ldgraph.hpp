#pragma once

// Umbrella header.

#include "ldgraph/appr.hpp"
#include "ldgraph/datasets.hpp"
#include "ldgraph/errors.hpp"
#include "ldgraph/eval.hpp"
#include "ldgraph/graph.hpp"
#include "ldgraph/labelfeat.hpp"
#include "ldgraph/matrix.hpp"
#include "ldgraph/metrics.hpp"
#include "ldgraph/nn.hpp"
#include "ldgraph/rng.hpp"
