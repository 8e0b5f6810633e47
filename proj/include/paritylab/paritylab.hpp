// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "paritylab/bitstring.hpp"
#include "paritylab/checkpoint.hpp"
#include "paritylab/config.hpp"
#include "paritylab/datagen.hpp"
#include "paritylab/error.hpp"
#include "paritylab/experiment.hpp"
#include "paritylab/gradcheck.hpp"
#include "paritylab/lstm.hpp"
#include "paritylab/nim.hpp"
#include "paritylab/noise.hpp"
#include "paritylab/records.hpp"
#include "paritylab/rng.hpp"
#include "paritylab/trainer.hpp"
