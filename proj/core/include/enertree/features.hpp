#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace enertree {

// Canonical feature order. Every weight vector in the library is indexed in
// this order, restricted to the active subset.
enum class Feature : std::size_t {
  kBatchSize = 0,
  kSeqLen,
  kFlops,      // millions of floating point operations
  kMemBytes,   // MiB read + written
  kCpuUtil,    // %
  kMemUsg,     // %
  kGpuUtil,    // %
  kGmUsg,      // %
  kGClk,       // MHz
  kGmClk,      // MHz
  kLatency,    // s
  kGpuEnergy,  // J, driver reported
};

inline constexpr std::size_t kNumFeatures = 12;
inline constexpr std::size_t kNumModelFeatures = 4;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "batch_size", "seq_len", "flops",  "mem_bytes", "cpu_util", "mem_usg",
    "gpu_util",   "gm_usg",  "g_clk",  "gm_clk",    "latency",  "gpu_energy"};

constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }
constexpr std::string_view name_of(Feature f) { return kFeatureNames[index_of(f)]; }
std::optional<Feature> feature_from_name(std::string_view name);

// True for the hardware-independent descriptors (batch, seq, flops, memory).
constexpr bool is_model_feature(Feature f) { return index_of(f) < kNumModelFeatures; }
constexpr bool is_percentage(Feature f) {
  return f == Feature::kCpuUtil || f == Feature::kMemUsg || f == Feature::kGpuUtil ||
         f == Feature::kGmUsg;
}

struct FeatureVector {
  std::array<double, kNumFeatures> values{};

  double& operator[](Feature f) { return values[index_of(f)]; }
  double operator[](Feature f) const { return values[index_of(f)]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Describes the first problem with `fv` (non-finite value, out-of-range
// percentage, ...), or nullopt if the vector is within its domain.
std::optional<std::string> check_feature_domain(const FeatureVector& fv);

enum class FeatureSubset { kAll, kModelOnly, kResourceOnly };

inline constexpr std::array<FeatureSubset, 3> kAllSubsets = {
    FeatureSubset::kAll, FeatureSubset::kModelOnly, FeatureSubset::kResourceOnly};

// Features of the subset in canonical order.
std::span<const Feature> features_of(FeatureSubset subset);
std::size_t subset_size(FeatureSubset subset);

std::string_view to_string(FeatureSubset subset);
// Accepts "all", "model_only", "resource_only" (and the hyphenated forms).
FeatureSubset parse_subset(std::string_view text);

}  // namespace enertree
