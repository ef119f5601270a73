#pragma once

#include "pathctl/convergence.hpp"
#include "pathctl/functional.hpp"
#include "pathctl/game.hpp"
#include "pathctl/io.hpp"
#include "pathctl/ito_study.hpp"
#include "pathctl/lq_delay.hpp"
#include "pathctl/oracle.hpp"
#include "pathctl/path.hpp"
#include "pathctl/simulation.hpp"
