#pragma once

#include "bodycomp/cohort.hpp"
#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"
#include "bodycomp/eval.hpp"
#include "bodycomp/format.hpp"
#include "bodycomp/metrics.hpp"
#include "bodycomp/phantom.hpp"
#include "bodycomp/postproc.hpp"
#include "bodycomp/region.hpp"
#include "bodycomp/report_io.hpp"
#include "bodycomp/stats.hpp"
#include "bodycomp/volume_io.hpp"
