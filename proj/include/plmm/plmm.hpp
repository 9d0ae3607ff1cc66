#pragma once

#include "plmm/blup.hpp"
#include "plmm/core_data.hpp"
#include "plmm/cv.hpp"
#include "plmm/decomposition.hpp"
#include "plmm/error.hpp"
#include "plmm/lasso.hpp"
#include "plmm/rotation.hpp"
#include "plmm/simulation.hpp"
#include "plmm/types.hpp"
#include "plmm/variance.hpp"
