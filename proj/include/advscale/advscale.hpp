#ifndef ADVSCALE_ADVSCALE_HPP
#define ADVSCALE_ADVSCALE_HPP

#include "advscale/allocator.hpp"
#include "advscale/brent.hpp"
#include "advscale/envelope.hpp"
#include "advscale/error.hpp"
#include "advscale/lbfgs.hpp"
#include "advscale/parametric_fit.hpp"
#include "advscale/regression.hpp"
#include "advscale/run_data.hpp"
#include "advscale/scaling_law.hpp"
#include "advscale/synthgen.hpp"
#include "advscale/validity.hpp"

#endif  // ADVSCALE_ADVSCALE_HPP
