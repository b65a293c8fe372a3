#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "enertree/synthetic.hpp"
#include "enertree/tree_regressors.hpp"

namespace enertree {

// A synthetic spec plus the training settings it is meant to be evaluated
// with. The document is a synthetic spec with an optional "train" object whose
// keys (learning_rate, epochs, tau, seed, subset, patience, min_improvement)
// override the TrainHyper defaults.
struct Scenario {
  synthetic::Spec spec;
  TrainHyper hyper;
};

Scenario parse_scenario(std::string_view document);
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& scenario);

}  // namespace enertree
