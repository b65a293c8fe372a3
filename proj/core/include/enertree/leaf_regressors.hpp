#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "enertree/linear_model.hpp"
#include "enertree/model_tree.hpp"

namespace enertree {

// Primitives seen in Transformer implementations. The vocabulary is open:
// any primitive string found in training data gets its own regressor.
inline constexpr std::array<std::string_view, 17> kKnownPrimitives = {
    "Linear",  "LayerNorm",  "Embedding", "BatchNorm1d", "Conv1d",  "MaxPool1d",
    "AvgPool1d", "LSTM",     "Tanh",      "Conv1D",      "LogSigmoid", "ReLU",
    "Sigmoid", "GELU",       "LeakyReLU", "MatMul",      "Softmax"};

bool is_known_primitive(std::string_view primitive);

struct LeafTrainOptions {
  FeatureSubset subset = FeatureSubset::kAll;
  // Also fit one pooled regressor over every leaf, used for primitives that
  // have no dedicated regressor.
  bool fallback_generic = false;
};

struct LeafPredictOptions {
  // Predictions below the floor are raised to it. Unset: reported as-is.
  std::optional<double> floor;
};

// One linear regressor per primitive type.
struct PrimitiveRegressorSet {
  FeatureSubset subset = FeatureSubset::kAll;
  std::map<std::string, LinearRegressor> primitives;
  std::optional<LinearRegressor> generic;

  friend bool operator==(const PrimitiveRegressorSet&, const PrimitiveRegressorSet&) = default;
};

// Requires ground truth on every leaf (ValidationError otherwise).
PrimitiveRegressorSet train_leaf_regressors(std::span<const ModelTree> training_trees,
                                            const LeafTrainOptions& options = {});

// Throws ValidationError for non-leaf nodes and UnknownPrimitiveError for
// primitives without a regressor when no generic fallback was trained.
double predict_leaf(const PrimitiveRegressorSet& regs, const Node& node,
                    const LeafPredictOptions& options = {});

// Predictions for every leaf of the tree.
PredictionMap predict_leaves(const PrimitiveRegressorSet& regs, const ModelTree& tree,
                             const LeafPredictOptions& options = {});

std::string serialize_leaf_regressors(const PrimitiveRegressorSet& regs);
PrimitiveRegressorSet parse_leaf_regressors(std::string_view document);

}  // namespace enertree
