#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enertree/leaf_regressors.hpp"
#include "enertree/linear_model.hpp"
#include "enertree/model_tree.hpp"
#include "enertree/normalizer.hpp"

namespace enertree {

// How non-leaf energies are obtained from the tree.
//   kEnd2End       weighted child sum, trained through the whole recursion
//   kStepWise      same weighted sum, trained per node on ground-truth children
//   kPredictedSum  plain child sum, no parameters
//   kUnstructured  direct linear regression on non-leaf node features
//   kBaseline      utilisation-based software estimate (whole model only)
enum class RegressorKind { kEnd2End, kStepWise, kPredictedSum, kUnstructured, kBaseline };

std::string_view to_string(RegressorKind kind);
RegressorKind parse_regressor_kind(std::string_view text);

struct TrainHyper {
  double learning_rate = 1e-3;
  int epochs = 500;
  double tau = 10.0;
  std::uint64_t seed = 0;
  FeatureSubset subset = FeatureSubset::kAll;
  // Stop once the loss improved by less than min_improvement over the last
  // `patience` epochs.
  int patience = 20;
  double min_improvement = 1e-8;

  friend bool operator==(const TrainHyper&, const TrainHyper&) = default;
};

// Shared non-leaf regressor: every child c of a non-leaf node is weighted by
// alpha(c) = 1 + tanh(W . feat(c) + b) / tau.
struct TreeRegressorParams {
  RegressorKind kind = RegressorKind::kEnd2End;
  std::vector<double> weights;
  double bias = 0.0;
  double tau = 10.0;
  Normalizer normalizer;

  friend bool operator==(const TreeRegressorParams&, const TreeRegressorParams&) = default;
};

// W = 0, b = 0 over the given normalizer: reproduces PredictedSum.
TreeRegressorParams zero_params(Normalizer normalizer, double tau = 10.0,
                                RegressorKind kind = RegressorKind::kEnd2End);

double alpha(const TreeRegressorParams& params, const Node& child);

// Leaves take their leaf prediction, internal nodes the sum of their
// children. ValidationError when a leaf has no prediction.
PredictionMap predict_sum(const ModelTree& tree, const PredictionMap& leaf_preds);

// Leaves take their leaf prediction, internal nodes sum alpha(c) * P(c).
PredictionMap end2end_predict(const TreeRegressorParams& params, const ModelTree& tree,
                              const PredictionMap& leaf_preds);

// StepWise differs from End2End only in training; prediction is the same
// bottom-up recursion.
PredictionMap stepwise_predict(const TreeRegressorParams& params, const ModelTree& tree,
                               const PredictionMap& leaf_preds);

// Sum over non-leaf nodes s of (P(s) - G(s))^2 / G(s)^2 with P from
// end2end_predict. ValidationError when a non-leaf node lacks positive
// ground truth.
double tree_loss(const TreeRegressorParams& params, const ModelTree& tree,
                 const PredictionMap& leaf_preds);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> d_weights;
  double d_bias = 0.0;
};

// tree_loss and its gradient with respect to W and b, through the full
// recursion.
LossGradient tree_loss_gradient(const TreeRegressorParams& params, const ModelTree& tree,
                                const PredictionMap& leaf_preds);

// Per-node loss where each parent is predicted from its children's ground
// truth: sum over non-leaf s of (sum_c alpha(c) G(c) - G(s))^2 / G(s)^2.
LossGradient stepwise_loss_gradient(const TreeRegressorParams& params, const ModelTree& tree);

struct TrainStats {
  int epochs_run = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Adam on the summed per-tree loss, starting from W = 0, b = 0. The
// normalizer is fitted on every non-root node of the training trees.
// Throws TrainingError on a non-finite loss.
TreeRegressorParams train_end2end(std::span<const ModelTree> training_trees,
                                  const PrimitiveRegressorSet& leaf_regs, const TrainHyper& hyper,
                                  TrainStats* stats = nullptr);

TreeRegressorParams train_stepwise(std::span<const ModelTree> training_trees,
                                   const TrainHyper& hyper, TrainStats* stats = nullptr);

// One shared linear regressor over module and model nodes, ignoring the
// tree structure.
struct UnstructuredParams {
  LinearRegressor regressor;

  friend bool operator==(const UnstructuredParams&, const UnstructuredParams&) = default;
};

UnstructuredParams train_unstructured(std::span<const ModelTree> training_trees,
                                      const TrainHyper& hyper);
double unstructured_predict(const UnstructuredParams& params, const Node& node);
// Leaves from leaf_preds, every non-leaf node from the shared regressor.
PredictionMap unstructured_predict_tree(const UnstructuredParams& params, const ModelTree& tree,
                                        const PredictionMap& leaf_preds);

// What the `train` subcommand writes: the kind tag plus whichever parameter
// block that kind uses, the hyperparameters and the content hash of the
// leaf-regressor file it was trained against.
struct TreeModel {
  RegressorKind kind = RegressorKind::kEnd2End;
  TreeRegressorParams weighted;      // kEnd2End, kStepWise
  UnstructuredParams unstructured;   // kUnstructured
  TrainHyper hyper;
  std::string leaf_regressors_hash;

  friend bool operator==(const TreeModel&, const TreeModel&) = default;
};

// Trains whichever parameter block `kind` uses. PredictedSum has nothing to
// train; kBaseline is not a tree model and raises ValidationError.
// leaf_regressors_hash is left empty.
TreeModel train_tree_model(std::span<const ModelTree> training_trees,
                           const PrimitiveRegressorSet& leaf_regs, RegressorKind kind,
                           const TrainHyper& hyper, TrainStats* stats = nullptr);

PredictionMap predict_tree(const TreeModel& model, const ModelTree& tree,
                           const PredictionMap& leaf_preds);

std::string serialize_tree_model(const TreeModel& model);
TreeModel parse_tree_model(std::string_view document);

// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string content_hash(std::string_view bytes);

}  // namespace enertree
