#pragma once

// Umbrella header.

#include "robustnmf/bench.hpp"
#include "robustnmf/corruption.hpp"
#include "robustnmf/dataset.hpp"
#include "robustnmf/errors.hpp"
#include "robustnmf/matrix.hpp"
#include "robustnmf/matrix_io.hpp"
#include "robustnmf/metrics.hpp"
#include "robustnmf/report.hpp"
#include "robustnmf/rng.hpp"
#include "robustnmf/solver.hpp"
#include "robustnmf/target_polish.hpp"
#include "robustnmf/weights.hpp"
