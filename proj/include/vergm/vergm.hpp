#pragma once

// Umbrella header for the count-valued flow-network modeling toolkit.

#include "vergm/common.hpp"
#include "vergm/csv.hpp"
#include "vergm/ffgrid.hpp"
#include "vergm/knockout.hpp"
#include "vergm/likelihood.hpp"
#include "vergm/metrics.hpp"
#include "vergm/model_io.hpp"
#include "vergm/network.hpp"
#include "vergm/node_table.hpp"
#include "vergm/parallel.hpp"
#include "vergm/pipeline.hpp"
#include "vergm/rng.hpp"
#include "vergm/sampler.hpp"
#include "vergm/terms.hpp"
#include "vergm/validate.hpp"
#include "vergm/version.hpp"
