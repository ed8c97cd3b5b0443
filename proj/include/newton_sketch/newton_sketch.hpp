#pragma once

#include "newton_sketch/core.hpp"
#include "newton_sketch/fwht.hpp"
#include "newton_sketch/interior_point.hpp"
#include "newton_sketch/objectives.hpp"
#include "newton_sketch/projection.hpp"
#include "newton_sketch/sketch.hpp"
#include "newton_sketch/solver.hpp"
#include "newton_sketch/subproblem.hpp"
