#pragma once

// Umbrella header: neural geodesic fields on triangle meshes.

#include "neurogf/core.hpp"
#include "neurogf/dataset.hpp"
#include "neurogf/mesh.hpp"
#include "neurogf/metrics.hpp"
#include "neurogf/model.hpp"
#include "neurogf/optim.hpp"
#include "neurogf/query.hpp"
#include "neurogf/sdf.hpp"
#include "neurogf/steiner.hpp"
#include "neurogf/tensor.hpp"
#include "neurogf/trainer.hpp"
