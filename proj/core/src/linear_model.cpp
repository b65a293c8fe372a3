#include "enertree/linear_model.hpp"

#include <Eigen/Dense>

#include "enertree/error.hpp"

namespace enertree {

double LinearRegressor::predict(const FeatureVector& fv) const {
  const auto features = features_of(normalizer.subset());
  double y = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    y += weights[k] * (fv[features[k]] - normalizer.mean()[k]) / normalizer.stddev()[k];
  }
  return y;
}

LinearRegressor fit_least_squares(std::span<const FeatureVector> features,
                                  std::span<const double> targets, FeatureSubset subset) {
  if (features.empty()) throw ValidationError("least squares needs at least one sample");
  if (features.size() != targets.size()) {
    throw ValidationError("least squares: feature and target counts differ");
  }
  LinearRegressor reg;
  reg.normalizer = Normalizer::fit(features, subset);
  reg.n_samples = features.size();

  const auto n = static_cast<Eigen::Index>(features.size());
  const auto d = static_cast<Eigen::Index>(reg.normalizer.dimension());
  Eigen::MatrixXd design(n, d + 1);
  Eigen::VectorXd y(n);
  std::vector<double> row(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    reg.normalizer.apply_into(features[static_cast<std::size_t>(i)], row);
    for (Eigen::Index k = 0; k < d; ++k) design(i, k) = row[static_cast<std::size_t>(k)];
    design(i, d) = 1.0;
    y(i) = targets[static_cast<std::size_t>(i)];
  }

  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  const Eigen::VectorXd theta = cod.solve(y);
  reg.weights.assign(theta.data(), theta.data() + d);
  reg.bias = theta(d);
  return reg;
}

}  // namespace enertree
