/**
 * @brief Umbrella header.
 */
#pragma once

#include "types.hpp"
#include "chain.hpp"
#include "form.hpp"
#include "lp.hpp"
#include "flat_norm.hpp"
#include "mollifier.hpp"
#include "charge.hpp"
#include "smoothing.hpp"
#include "estimators.hpp"
#include "paraproduct.hpp"
#include "genfun.hpp"
#include "io.hpp"
