#pragma once

// Umbrella header.

#include "hcl/dag.hpp"
#include "hcl/dataset.hpp"
#include "hcl/engine.hpp"
#include "hcl/io.hpp"
#include "hcl/latent.hpp"
#include "hcl/metrics.hpp"
#include "hcl/simulate.hpp"
#include "hcl/stats.hpp"
#include "hcl/structure_learning.hpp"
#include "hcl/theory.hpp"
#include "hcl/vbgmm.hpp"
