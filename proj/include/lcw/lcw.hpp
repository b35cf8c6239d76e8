#pragma once

// Umbrella header: conformal curvature invariants (Cotton-York in 3D, the
// Weyl operator in 4D), their eigenflag classification, distribution
// analysis, and the limiting-Carleman-weight decision procedures.

#include "lcw/jet.hpp"
#include "lcw/linalg.hpp"
#include "lcw/expr.hpp"
#include "lcw/metric.hpp"
#include "lcw/region.hpp"
#include "lcw/curvature.hpp"
#include "lcw/bivector.hpp"
#include "lcw/classify.hpp"
#include "lcw/distribution.hpp"
#include "lcw/killing.hpp"
#include "lcw/decide.hpp"
#include "lcw/report.hpp"
