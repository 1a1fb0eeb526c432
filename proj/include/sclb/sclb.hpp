#pragma once

// Umbrella header.

#include "sclb/analytics.hpp"
#include "sclb/arch.hpp"
#include "sclb/checkpoint.hpp"
#include "sclb/common.hpp"
#include "sclb/config.hpp"
#include "sclb/data.hpp"
#include "sclb/dense_math.hpp"
#include "sclb/layers.hpp"
#include "sclb/loss.hpp"
#include "sclb/mdl.hpp"
#include "sclb/network.hpp"
#include "sclb/optim.hpp"
#include "sclb/rng.hpp"
#include "sclb/synth.hpp"
#include "sclb/tensor.hpp"
#include "sclb/train.hpp"
