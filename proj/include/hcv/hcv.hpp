#pragma once

#include "hcv/errors.hpp"
#include "hcv/fluctuations.hpp"
#include "hcv/io.hpp"
#include "hcv/meanfield.hpp"
#include "hcv/model.hpp"
#include "hcv/odesys.hpp"
#include "hcv/parallel.hpp"
#include "hcv/quadrature.hpp"
#include "hcv/random.hpp"
#include "hcv/sensitivity.hpp"
#include "hcv/ssa.hpp"
#include "hcv/stationary.hpp"
#include "hcv/stats.hpp"
