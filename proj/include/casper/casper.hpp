#pragma once

#include "casper/analysis.hpp"
#include "casper/classification.hpp"
#include "casper/engine.hpp"
#include "casper/error.hpp"
#include "casper/experiment_spec.hpp"
#include "casper/experiments.hpp"
#include "casper/features.hpp"
#include "casper/grammar.hpp"
#include "casper/items.hpp"
#include "casper/plot.hpp"
#include "casper/rng.hpp"
#include "casper/stimuli.hpp"
#include "casper/trace.hpp"
#include "casper/version.hpp"
