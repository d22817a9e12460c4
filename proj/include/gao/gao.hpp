#pragma once

#include "gao/errors.hpp"
#include "gao/numerics.hpp"
#include "gao/mortality.hpp"
#include "gao/annuity.hpp"
#include "gao/valuation.hpp"
#include "gao/simulate.hpp"
