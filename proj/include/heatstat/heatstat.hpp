#pragma once

#include "heatstat/asymptotics.hpp"
#include "heatstat/error.hpp"
#include "heatstat/exact.hpp"
#include "heatstat/montecarlo.hpp"
#include "heatstat/parallel.hpp"
#include "heatstat/protocol.hpp"
#include "heatstat/qcore.hpp"
#include "heatstat/qubit.hpp"
#include "heatstat/qutrit.hpp"
