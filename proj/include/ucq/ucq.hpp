#pragma once

#include "ucq/classical.hpp"
#include "ucq/errors.hpp"
#include "ucq/ising.hpp"
#include "ucq/kdtree.hpp"
#include "ucq/multilevel.hpp"
#include "ucq/pipeline.hpp"
#include "ucq/qaoa.hpp"
#include "ucq/qubo.hpp"
#include "ucq/ucp_model.hpp"
