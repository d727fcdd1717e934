#pragma once

#include "bbs/experiments/config.hpp"
#include "bbs/experiments/csv.hpp"
#include "bbs/experiments/oracle.hpp"
#include "bbs/experiments/parallel.hpp"
#include "bbs/experiments/runner.hpp"
#include "bbs/experiments/stats.hpp"
#include "bbs/experiments/svg.hpp"
