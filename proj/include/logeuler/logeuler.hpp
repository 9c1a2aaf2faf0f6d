#pragma once

#include "logeuler/error.hpp"
#include "logeuler/grid.hpp"
#include "logeuler/field.hpp"
#include "logeuler/random.hpp"
#include "logeuler/random_field.hpp"
#include "logeuler/snapshot_io.hpp"
#include "logeuler/parallel.hpp"
#include "logeuler/logspaces/report.hpp"
#include "logeuler/logspaces/hlog.hpp"
#include "logeuler/logspaces/kernel.hpp"
#include "logeuler/logspaces/commutator.hpp"
#include "logeuler/logspaces/diff_quotient.hpp"
#include "logeuler/flow/solver.hpp"
#include "logeuler/stochastic/flow.hpp"
#include "logeuler/experiments/rate_fit.hpp"
#include "logeuler/experiments/experiments.hpp"
