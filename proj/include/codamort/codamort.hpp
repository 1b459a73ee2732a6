#pragma once

// Compositional-data mortality forecasting: life-table death counts are
// treated as compositions, mapped to real space by CLR/ILR or the
// alpha-transformation, factorized by a rank-K SVD and extrapolated with
// ARIMA models.

#include "codamort/arima.hpp"
#include "codamort/composition.hpp"
#include "codamort/errors.hpp"
#include "codamort/evaluation.hpp"
#include "codamort/hmd.hpp"
#include "codamort/lifetable.hpp"
#include "codamort/optim.hpp"
#include "codamort/pipeline.hpp"
#include "codamort/runner.hpp"
#include "codamort/synthetic.hpp"
#include "codamort/transforms.hpp"
#include "codamort/tuning.hpp"
