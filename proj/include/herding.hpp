#pragma once

#include "herding/common.hpp"
#include "herding/rng.hpp"
#include "herding/state.hpp"
#include "herding/feature_map.hpp"
#include "herding/maximizer.hpp"
#include "herding/engine.hpp"
#include "herding/scalar.hpp"
#include "herding/diag.hpp"
#include "herding/models.hpp"
#include "herding/latent.hpp"
#include "herding/cond.hpp"
#include "herding/io.hpp"
