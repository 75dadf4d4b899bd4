#pragma once

// Everything: numerics, wavelet, ewtb, network, supervision, data, harness.

#include "ffrt/data/degrade.hpp"
#include "ffrt/data/manifest.hpp"
#include "ffrt/data/pnm.hpp"
#include "ffrt/data/synth.hpp"
#include "ffrt/ewtb/ewtb.hpp"
#include "ffrt/harness/checkpoint.hpp"
#include "ffrt/harness/commands.hpp"
#include "ffrt/harness/config.hpp"
#include "ffrt/harness/dataset.hpp"
#include "ffrt/harness/evaluate.hpp"
#include "ffrt/harness/gradsuite.hpp"
#include "ffrt/harness/train.hpp"
#include "ffrt/network/flops.hpp"
#include "ffrt/network/model.hpp"
#include "ffrt/numerics/adamw.hpp"
#include "ffrt/numerics/grad_check.hpp"
#include "ffrt/supervision/geometry.hpp"
#include "ffrt/supervision/loss.hpp"
#include "ffrt/supervision/metrics.hpp"
#include "ffrt/wavelet/frequency.hpp"
#include "ffrt/wavelet/haar.hpp"
