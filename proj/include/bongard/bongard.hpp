#pragma once

#include "bongard/core/compose.hpp"
#include "bongard/core/errors.hpp"
#include "bongard/core/manifest.hpp"
#include "bongard/core/raster.hpp"
#include "bongard/core/sha256.hpp"
#include "bongard/core/test_split.hpp"
#include "bongard/core/types.hpp"
#include "bongard/eval/binary.hpp"
#include "bongard/eval/parsers.hpp"
#include "bongard/gateway/gateway.hpp"
#include "bongard/harness/report.hpp"
#include "bongard/harness/results.hpp"
#include "bongard/harness/run_spec.hpp"
#include "bongard/harness/runner.hpp"
#include "bongard/judge/ensemble.hpp"
#include "bongard/prompts/catalog.hpp"
#include "bongard/rwr/forge.hpp"
#include "bongard/rwr/search.hpp"
#include "bongard/strategy/engine.hpp"
