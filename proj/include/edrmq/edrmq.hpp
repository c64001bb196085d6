#pragma once

// Umbrella header for the edrmq library.

#include "edrmq/conditional.hpp"
#include "edrmq/corpus.hpp"
#include "edrmq/embedder.hpp"
#include "edrmq/errors.hpp"
#include "edrmq/graph.hpp"
#include "edrmq/late_interaction.hpp"
#include "edrmq/marginalizer.hpp"
#include "edrmq/rng.hpp"
#include "edrmq/run_config.hpp"
#include "edrmq/synth.hpp"
#include "edrmq/tfidf.hpp"
