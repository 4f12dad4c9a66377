#pragma once

#include "selfsim/quadrature.hpp"
#include "selfsim/special_functions.hpp"
#include "selfsim/grid.hpp"
#include "selfsim/kernels.hpp"
#include "selfsim/coag_ops.hpp"
#include "selfsim/linop.hpp"
#include "selfsim/boundary_layer.hpp"
#include "selfsim/profile_solver.hpp"
#include "selfsim/csv.hpp"
#include "selfsim/verify.hpp"
