#pragma once

#include "nfcrb/checks.hpp"
#include "nfcrb/core.hpp"
#include "nfcrb/fim_crb.hpp"
#include "nfcrb/finite_difference.hpp"
#include "nfcrb/geometry.hpp"
#include "nfcrb/optimizer.hpp"
#include "nfcrb/reposition.hpp"
#include "nfcrb/scenario_io.hpp"
#include "nfcrb/signal_model.hpp"
