#pragma once

#include "joinscout/error.hpp"
#include "joinscout/tabular_io.hpp"
#include "joinscout/text_classify.hpp"
#include "joinscout/profiler.hpp"
#include "joinscout/join_metrics.hpp"
#include "joinscout/distribution_fit.hpp"
#include "joinscout/profile_comparison.hpp"
#include "joinscout/quality_predictor.hpp"
#include "joinscout/discovery.hpp"
