#pragma once

#include "isoperim/radial_function.hpp"
#include "isoperim/quadrature.hpp"
#include "isoperim/surface.hpp"
#include "isoperim/integrator.hpp"
#include "isoperim/curvature.hpp"
#include "isoperim/dynamics.hpp"
#include "isoperim/shooting.hpp"
#include "isoperim/analysis.hpp"
