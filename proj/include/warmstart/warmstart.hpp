#pragma once

#include "warmstart/cli.hpp"
#include "warmstart/config.hpp"
#include "warmstart/data.hpp"
#include "warmstart/diagnostics.hpp"
#include "warmstart/error.hpp"
#include "warmstart/harness.hpp"
#include "warmstart/nn.hpp"
#include "warmstart/optim.hpp"
#include "warmstart/parallel.hpp"
#include "warmstart/record.hpp"
#include "warmstart/reinit.hpp"
#include "warmstart/results.hpp"
#include "warmstart/rng.hpp"
#include "warmstart/stats.hpp"
#include "warmstart/verify.hpp"
