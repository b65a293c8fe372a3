#include "enertree/features.hpp"

#include <cmath>

#include "enertree/error.hpp"

namespace enertree {
namespace {

constexpr std::array<Feature, kNumFeatures> kAllFeatures = {
    Feature::kBatchSize, Feature::kSeqLen,  Feature::kFlops,   Feature::kMemBytes,
    Feature::kCpuUtil,   Feature::kMemUsg,  Feature::kGpuUtil, Feature::kGmUsg,
    Feature::kGClk,      Feature::kGmClk,   Feature::kLatency, Feature::kGpuEnergy};

}  // namespace

std::optional<Feature> feature_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[i] == name) return kAllFeatures[i];
  }
  return std::nullopt;
}

std::optional<std::string> check_feature_domain(const FeatureVector& fv) {
  for (Feature f : kAllFeatures) {
    const double v = fv[f];
    const std::string name(name_of(f));
    if (!std::isfinite(v)) return name + " is not finite";
    if ((f == Feature::kBatchSize || f == Feature::kSeqLen) && v < 1.0) {
      return name + " must be >= 1";
    }
    if (is_percentage(f) && (v < 0.0 || v > 100.0)) return name + " must be within [0, 100]";
    if (v < 0.0) return name + " must be non-negative";
  }
  return std::nullopt;
}

std::span<const Feature> features_of(FeatureSubset subset) {
  const std::span<const Feature> all(kAllFeatures);
  switch (subset) {
    case FeatureSubset::kAll:
      return all;
    case FeatureSubset::kModelOnly:
      return all.first(kNumModelFeatures);
    case FeatureSubset::kResourceOnly:
      return all.subspan(kNumModelFeatures);
  }
  return all;
}

std::size_t subset_size(FeatureSubset subset) { return features_of(subset).size(); }

std::string_view to_string(FeatureSubset subset) {
  switch (subset) {
    case FeatureSubset::kAll:
      return "all";
    case FeatureSubset::kModelOnly:
      return "model_only";
    case FeatureSubset::kResourceOnly:
      return "resource_only";
  }
  return "all";
}

FeatureSubset parse_subset(std::string_view text) {
  if (text == "all") return FeatureSubset::kAll;
  if (text == "model_only" || text == "model-only") return FeatureSubset::kModelOnly;
  if (text == "resource_only" || text == "resource-only") return FeatureSubset::kResourceOnly;
  throw ValidationError("unknown feature subset '" + std::string(text) + "'");
}

}  // namespace enertree
