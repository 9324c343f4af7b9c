#pragma once

#include "moodbench/baselines.hpp"
#include "moodbench/config.hpp"
#include "moodbench/csv_io.hpp"
#include "moodbench/experiments.hpp"
#include "moodbench/grid_search.hpp"
#include "moodbench/instances.hpp"
#include "moodbench/krr.hpp"
#include "moodbench/linreg.hpp"
#include "moodbench/metrics.hpp"
#include "moodbench/protocol.hpp"
#include "moodbench/report.hpp"
#include "moodbench/rng.hpp"
#include "moodbench/svm.hpp"
#include "moodbench/synthetic.hpp"
#include "moodbench/transform.hpp"
#include "moodbench/types.hpp"
