#pragma once

#include "hdpflow/bundle.hpp"
#include "hdpflow/config.hpp"
#include "hdpflow/corpus.hpp"
#include "hdpflow/error.hpp"
#include "hdpflow/events.hpp"
#include "hdpflow/hdp.hpp"
#include "hdpflow/pipeline.hpp"
#include "hdpflow/preprocess.hpp"
#include "hdpflow/queries.hpp"
#include "hdpflow/relatedness.hpp"
#include "hdpflow/service.hpp"
#include "hdpflow/stopwords.hpp"
