#pragma once

#include "picscore/baselines.hpp"
#include "picscore/csv.hpp"
#include "picscore/dataset.hpp"
#include "picscore/density.hpp"
#include "picscore/errors.hpp"
#include "picscore/metrics.hpp"
#include "picscore/pic.hpp"
#include "picscore/synth.hpp"
#include "picscore/version.hpp"
