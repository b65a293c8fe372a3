#pragma once

#include "enertree/analysis.hpp"
#include "enertree/baseline.hpp"
#include "enertree/error.hpp"
#include "enertree/evaluation.hpp"
#include "enertree/features.hpp"
#include "enertree/leaf_regressors.hpp"
#include "enertree/linear_model.hpp"
#include "enertree/model_tree.hpp"
#include "enertree/normalizer.hpp"
#include "enertree/scenario.hpp"
#include "enertree/synthetic.hpp"
#include "enertree/tree_regressors.hpp"
