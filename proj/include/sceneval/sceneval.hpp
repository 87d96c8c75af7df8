#pragma once

#include "sceneval/annotate/extractor.hpp"
#include "sceneval/core/config.hpp"
#include "sceneval/core/error.hpp"
#include "sceneval/core/random.hpp"
#include "sceneval/core/scenario.hpp"
#include "sceneval/core/schema.hpp"
#include "sceneval/core/weights.hpp"
#include "sceneval/frames/assets.hpp"
#include "sceneval/frames/collage.hpp"
#include "sceneval/frames/gif.hpp"
#include "sceneval/frames/grids.hpp"
#include "sceneval/frames/video.hpp"
#include "sceneval/gateway/client.hpp"
#include "sceneval/gateway/http_transport.hpp"
#include "sceneval/metrics/anova.hpp"
#include "sceneval/metrics/family.hpp"
#include "sceneval/metrics/loader.hpp"
#include "sceneval/metrics/score.hpp"
#include "sceneval/metrics/tables.hpp"
#include "sceneval/prompt/builder.hpp"
#include "sceneval/prompt/parser.hpp"
#include "sceneval/runner/runner.hpp"
#include "sceneval/service/server.hpp"
