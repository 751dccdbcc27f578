#pragma once

#include "edgemon/types.hpp"
#include "edgemon/random.hpp"
#include "edgemon/graph_model.hpp"
#include "edgemon/generator.hpp"
#include "edgemon/chain_stats.hpp"
#include "edgemon/estimators.hpp"
#include "edgemon/dissimilarity.hpp"
#include "edgemon/parallel.hpp"
#include "edgemon/detector.hpp"
#include "edgemon/eval.hpp"
#include "edgemon/io.hpp"
#include "edgemon/report.hpp"
