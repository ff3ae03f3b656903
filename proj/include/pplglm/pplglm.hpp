#pragma once

#include "pplglm/baselines.hpp"
#include "pplglm/error.hpp"
#include "pplglm/family.hpp"
#include "pplglm/glm.hpp"
#include "pplglm/inference.hpp"
#include "pplglm/interval_union.hpp"
#include "pplglm/lasso.hpp"
#include "pplglm/parametric_path.hpp"
#include "pplglm/random.hpp"
#include "pplglm/selective.hpp"
#include "pplglm/sim.hpp"
#include "pplglm/truncnorm.hpp"
