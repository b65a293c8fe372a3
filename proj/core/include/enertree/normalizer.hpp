#pragma once

#include <span>
#include <vector>

#include "enertree/features.hpp"
#include "enertree/model_tree.hpp"

namespace enertree {

// Z-score statistics for the features of one subset, fitted on training
// nodes and reused unchanged on test nodes.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(FeatureSubset subset, std::vector<double> mean, std::vector<double> stddev);

  // Population standard deviation. Zero-variance features store std 1, so
  // they normalise to a constant 0. Throws ValidationError on empty input.
  static Normalizer fit(std::span<const FeatureVector> samples, FeatureSubset subset);

  // (value - mean) / std per feature of the subset, canonical order.
  std::vector<double> apply(const FeatureVector& fv) const;
  void apply_into(const FeatureVector& fv, std::span<double> out) const;

  FeatureSubset subset() const noexcept { return subset_; }
  std::size_t dimension() const noexcept { return mean_.size(); }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& stddev() const noexcept { return stddev_; }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;

 private:
  FeatureSubset subset_ = FeatureSubset::kAll;
  std::vector<double> mean_;
  std::vector<double> stddev_;
};

Normalizer fit_normalizer(std::span<const Node* const> training_nodes, FeatureSubset subset);

inline std::vector<double> apply_normalizer(const Normalizer& norm, const Node& node) {
  return norm.apply(node.features);
}

}  // namespace enertree
