#pragma once

#include "cmab/bandit.hpp"
#include "cmab/coopucb2.hpp"
#include "cmab/csv.hpp"
#include "cmab/graph.hpp"
#include "cmab/harness.hpp"
#include "cmab/metrics.hpp"
#include "cmab/optimizer.hpp"
#include "cmab/spectral.hpp"
#include "cmab/team_state.hpp"
#include "cmab/weights.hpp"
