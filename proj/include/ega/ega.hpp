#pragma once

// Umbrella header for the enveloping-grasp-affordance toolkit.

#include "ega/cloud.hpp"
#include "ega/common.hpp"
#include "ega/errors.hpp"
#include "ega/eval.hpp"
#include "ega/json_io.hpp"
#include "ega/kdtree.hpp"
#include "ega/pcd.hpp"
#include "ega/pipeline.hpp"
#include "ega/ply.hpp"
#include "ega/quadric.hpp"
#include "ega/scene.hpp"
#include "ega/shell.hpp"
#include "ega/taubin.hpp"
