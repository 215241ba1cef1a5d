#pragma once

#include "crossrank/attention.hpp"
#include "crossrank/embedding_set.hpp"
#include "crossrank/error.hpp"
#include "crossrank/losses.hpp"
#include "crossrank/matrix.hpp"
#include "crossrank/metrics.hpp"
#include "crossrank/ranking.hpp"
#include "crossrank/rerank.hpp"
#include "crossrank/rng.hpp"
#include "crossrank/synth.hpp"
