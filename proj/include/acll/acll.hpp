#pragma once

#include "acll/bayesopt.hpp"
#include "acll/dataset.hpp"
#include "acll/dual.hpp"
#include "acll/errors.hpp"
#include "acll/experiment.hpp"
#include "acll/gp.hpp"
#include "acll/lifelong.hpp"
#include "acll/network.hpp"
#include "acll/ownership.hpp"
#include "acll/pruning.hpp"
#include "acll/risk.hpp"
