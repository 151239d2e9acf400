// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cbclm/annotations.hpp"
#include "cbclm/corpus.hpp"
#include "cbclm/curriculum.hpp"
#include "cbclm/difficulty.hpp"
#include "cbclm/errors.hpp"
#include "cbclm/metrics_report.hpp"
#include "cbclm/ngram.hpp"
#include "cbclm/rng.hpp"
#include "cbclm/run_config.hpp"
#include "cbclm/sampler.hpp"
#include "cbclm/textio.hpp"
#include "cbclm/toylm.hpp"
#include "cbclm/trainer.hpp"
