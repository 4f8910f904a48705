#pragma once

#include "larf/attention.hpp"
#include "larf/csv.hpp"
#include "larf/data_schema.hpp"
#include "larf/dataset.hpp"
#include "larf/errors.hpp"
#include "larf/eval.hpp"
#include "larf/eval_io.hpp"
#include "larf/forest.hpp"
#include "larf/forest_io.hpp"
#include "larf/generators.hpp"
#include "larf/metrics.hpp"
#include "larf/model_io.hpp"
#include "larf/models.hpp"
#include "larf/qp.hpp"
#include "larf/rng.hpp"
#include "larf/stats.hpp"
#include "larf/threading.hpp"
