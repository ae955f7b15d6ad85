#pragma once

#include "structbias/canonical_json.hpp"
#include "structbias/errors.hpp"
#include "structbias/extractors.hpp"
#include "structbias/pipeline.hpp"
#include "structbias/report.hpp"
#include "structbias/scoring.hpp"
#include "structbias/stats.hpp"
#include "structbias/stimuli.hpp"
#include "structbias/treebank.hpp"
#include "structbias/util.hpp"
