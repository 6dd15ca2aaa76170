#pragma once

#include "switchcount/cli.hpp"
#include "switchcount/count_dists.hpp"
#include "switchcount/diagnostics.hpp"
#include "switchcount/errors.hpp"
#include "switchcount/evidence.hpp"
#include "switchcount/gof.hpp"
#include "switchcount/markov_chain.hpp"
#include "switchcount/mcmc.hpp"
#include "switchcount/mle.hpp"
#include "switchcount/model.hpp"
#include "switchcount/optimize.hpp"
#include "switchcount/panel_data.hpp"
#include "switchcount/report.hpp"
#include "switchcount/rng.hpp"
#include "switchcount/simulate.hpp"
