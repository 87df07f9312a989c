#pragma once

#include "grasp/bench.hpp"
#include "grasp/cloud.hpp"
#include "grasp/correlator.hpp"
#include "grasp/error.hpp"
#include "grasp/geometry.hpp"
#include "grasp/grasp_models.hpp"
#include "grasp/kd_tree.hpp"
#include "grasp/normal_histogram.hpp"
#include "grasp/orientation_ranker.hpp"
#include "grasp/planner.hpp"
#include "grasp/scene.hpp"
#include "grasp/verifier.hpp"
#include "grasp/voxel_grid.hpp"
