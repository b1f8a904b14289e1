#pragma once

#include "mbrsel/core.hpp"
#include "mbrsel/corpus.hpp"
#include "mbrsel/metrics.hpp"
#include "mbrsel/rng.hpp"
#include "mbrsel/runner.hpp"
#include "mbrsel/selection.hpp"
#include "mbrsel/tokenize.hpp"
#include "mbrsel/utility.hpp"
