#pragma once

#include "bdmf/config.hpp"
#include "bdmf/csv.hpp"
#include "bdmf/diagnostics.hpp"
#include "bdmf/experiment.hpp"
#include "bdmf/infinite_moments.hpp"
#include "bdmf/master_equation.hpp"
#include "bdmf/mean_field.hpp"
#include "bdmf/model.hpp"
#include "bdmf/moments.hpp"
#include "bdmf/ode.hpp"
#include "bdmf/ssa.hpp"
