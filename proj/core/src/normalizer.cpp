#include "enertree/normalizer.hpp"

#include <cmath>

#include "enertree/error.hpp"

namespace enertree {

Normalizer::Normalizer(FeatureSubset subset, std::vector<double> mean, std::vector<double> stddev)
    : subset_(subset), mean_(std::move(mean)), stddev_(std::move(stddev)) {
  if (mean_.size() != subset_size(subset_) || stddev_.size() != mean_.size()) {
    throw ValidationError("normalizer statistics do not match the feature subset");
  }
  for (double s : stddev_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ValidationError("normalizer standard deviations must be strictly positive");
    }
  }
}

Normalizer Normalizer::fit(std::span<const FeatureVector> samples, FeatureSubset subset) {
  if (samples.empty()) throw ValidationError("cannot fit a normalizer on zero samples");
  const auto features = features_of(subset);
  const double n = static_cast<double>(samples.size());
  std::vector<double> mean(features.size(), 0.0);
  std::vector<double> stddev(features.size(), 0.0);
  for (std::size_t k = 0; k < features.size(); ++k) {
    double sum = 0.0;
    for (const auto& fv : samples) sum += fv[features[k]];
    const double m = sum / n;
    double sq = 0.0;
    for (const auto& fv : samples) {
      const double d = fv[features[k]] - m;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / n);
    mean[k] = m;
    // Relative guard: spreads at rounding level are treated as constant.
    stddev[k] = (sd > 1e-12 * std::max(1.0, std::abs(m))) ? sd : 1.0;
  }
  return Normalizer(subset, std::move(mean), std::move(stddev));
}

std::vector<double> Normalizer::apply(const FeatureVector& fv) const {
  std::vector<double> out(mean_.size());
  apply_into(fv, out);
  return out;
}

void Normalizer::apply_into(const FeatureVector& fv, std::span<double> out) const {
  const auto features = features_of(subset_);
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    out[k] = (fv[features[k]] - mean_[k]) / stddev_[k];
  }
}

Normalizer fit_normalizer(std::span<const Node* const> training_nodes, FeatureSubset subset) {
  std::vector<FeatureVector> samples;
  samples.reserve(training_nodes.size());
  for (const Node* node : training_nodes) samples.push_back(node->features);
  return Normalizer::fit(samples, subset);
}

}  // namespace enertree
