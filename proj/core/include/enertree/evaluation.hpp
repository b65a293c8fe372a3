#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "enertree/baseline.hpp"
#include "enertree/model_tree.hpp"
#include "enertree/tree_regressors.hpp"

namespace enertree {

// 100 * |predicted - ground_truth| / ground_truth. ValidationError unless
// ground_truth > 0.
double error_pct(double predicted, double ground_truth);

// One leave-one-model-out fold. Indices refer to the dataset passed to
// loo_splits.
struct Fold {
  std::string held_out_model;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// One fold per distinct model_name, ordered by name. ValidationError with
// fewer than two model names.
std::vector<Fold> loo_splits(std::span<const ModelTree> dataset);

struct EvalConfig {
  RegressorKind kind = RegressorKind::kEnd2End;
  TrainHyper hyper;
  bool fallback_generic = false;
  BaselineConfig baseline;
  // Parallel to the dataset; required for kBaseline.
  std::vector<ResourceTrace> traces;
  // Train folds on separate threads. Results do not depend on it.
  bool parallel_folds = false;
};

// Mean error per level; unset where the regressor does not predict a level.
struct LevelErrors {
  std::optional<double> ml;
  std::optional<double> module;
  std::optional<double> model;

  std::optional<double> at(Level level) const;
  std::optional<double>& at(Level level);

  friend bool operator==(const LevelErrors&, const LevelErrors&) = default;
};

struct NodeRecord {
  std::string model_name;
  std::int64_t batch_size = 0;
  std::int64_t seq_len = 0;
  std::string node;
  Level level = Level::kMl;
  double predicted = 0.0;
  double ground_truth = 0.0;
  double error_pct = 0.0;

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct CdfPoint {
  double error = 0.0;
  double fraction = 0.0;

  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

struct EvalReport {
  RegressorKind kind = RegressorKind::kEnd2End;
  TrainHyper hyper;
  std::vector<std::pair<std::string, LevelErrors>> per_model;  // ordered by model name
  LevelErrors average;        // unweighted mean over models
  LevelErrors pooled_nodes;   // mean over every node record of the level
  std::vector<NodeRecord> records;
  std::vector<std::pair<Level, std::vector<CdfPoint>>> cdf;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Leave-one-model-out evaluation. Every fold trains leaf and tree regressors
// on the other models and predicts the held-out model's trees; errors are
// averaged per level within each model, then across models.
EvalReport run_eval(std::span<const ModelTree> dataset, const EvalConfig& config);

// Empirical CDF over sorted errors: one point per distinct value.
// ValidationError on an empty list.
std::vector<CdfPoint> error_cdf(std::span<const double> errors);

struct AblationRow {
  std::string label;
  LevelErrors errors;

  friend bool operator==(const AblationRow&, const AblationRow&) = default;
};

// run_eval once per feature subset (all, model_only, resource_only).
std::vector<AblationRow> ablate_features(std::span<const ModelTree> dataset,
                                         const EvalConfig& config);

// run_eval once per non-leaf regressor (end2end, stepwise, predicted_sum,
// unstructured), plus baseline when traces are supplied.
std::vector<AblationRow> ablate_regressors(std::span<const ModelTree> dataset,
                                           const EvalConfig& config);

std::string serialize_report(const EvalReport& report);
std::string records_csv(const EvalReport& report);
std::string cdf_csv(const EvalReport& report);
std::string ablation_csv(std::span<const AblationRow> rows);
std::string serialize_ablation(std::span<const AblationRow> rows);

}  // namespace enertree
