#pragma once

#include "attrdim/covering.hpp"
#include "attrdim/dynsys.hpp"
#include "attrdim/errors.hpp"
#include "attrdim/flow.hpp"
#include "attrdim/linalg.hpp"
#include "attrdim/lorenz_analysis.hpp"
#include "attrdim/parallel.hpp"
#include "attrdim/spectra.hpp"
#include "attrdim/stretch.hpp"
