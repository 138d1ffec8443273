#pragma once

#include "riesz/error.hpp"
#include "riesz/scalar.hpp"
#include "riesz/tree_core.hpp"
#include "riesz/tree_kernels.hpp"
#include "riesz/tree_functions.hpp"
#include "riesz/truncation.hpp"
#include "riesz/quadrature.hpp"
#include "riesz/moments.hpp"
#include "riesz/weighted_tree.hpp"
#include "riesz/mc_engine.hpp"
#include "riesz/disk_geom.hpp"
