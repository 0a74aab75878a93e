#pragma once

#include "dbgae/adam.hpp"
#include "dbgae/autodiff.hpp"
#include "dbgae/checkpoint.hpp"
#include "dbgae/config.hpp"
#include "dbgae/data.hpp"
#include "dbgae/dbscan.hpp"
#include "dbgae/error.hpp"
#include "dbgae/eval.hpp"
#include "dbgae/graph.hpp"
#include "dbgae/inference.hpp"
#include "dbgae/model.hpp"
#include "dbgae/pipeline.hpp"
