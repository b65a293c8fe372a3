#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "enertree/features.hpp"
#include "enertree/normalizer.hpp"

namespace enertree {

// weights . normalize(features) + bias
struct LinearRegressor {
  Normalizer normalizer;
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t n_samples = 0;

  double predict(const FeatureVector& fv) const;

  friend bool operator==(const LinearRegressor&, const LinearRegressor&) = default;
};

// Ordinary least squares on z-scored features with an intercept. Solved by a
// complete orthogonal decomposition, so rank-deficient and underdetermined
// systems get the minimum-norm solution. Throws ValidationError on empty or
// mismatched input.
LinearRegressor fit_least_squares(std::span<const FeatureVector> features,
                                  std::span<const double> targets, FeatureSubset subset);

}  // namespace enertree
