#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "enertree/enertree.hpp"
#include "support/oracles.hpp"

using namespace enertree;

TEST(Features, CanonicalOrderAndNames) {
  EXPECT_EQ(kFeatureNames.size(), 12u);
  EXPECT_EQ(name_of(Feature::kBatchSize), "batch_size");
  EXPECT_EQ(name_of(Feature::kGpuEnergy), "gpu_energy");
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    const auto f = feature_from_name(kFeatureNames[k]);
    ASSERT_TRUE(f.has_value());
    EXPECT_EQ(index_of(*f), k);
  }
  EXPECT_FALSE(feature_from_name("watts").has_value());
}

TEST(Features, SubsetsPartitionTheFeatures) {
  EXPECT_EQ(subset_size(FeatureSubset::kAll), 12u);
  EXPECT_EQ(subset_size(FeatureSubset::kModelOnly), 4u);
  EXPECT_EQ(subset_size(FeatureSubset::kResourceOnly), 8u);
  std::vector<int> seen(kNumFeatures, 0);
  for (Feature f : features_of(FeatureSubset::kModelOnly)) {
    EXPECT_TRUE(is_model_feature(f));
    ++seen[index_of(f)];
  }
  for (Feature f : features_of(FeatureSubset::kResourceOnly)) {
    EXPECT_FALSE(is_model_feature(f));
    ++seen[index_of(f)];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Features, SubsetNamesRoundTrip) {
  for (FeatureSubset s : kAllSubsets) EXPECT_EQ(parse_subset(to_string(s)), s);
  EXPECT_EQ(parse_subset("model-only"), FeatureSubset::kModelOnly);
  EXPECT_THROW(parse_subset("everything"), Error);
}

TEST(Features, DomainCheck) {
  FeatureVector f = oracle::features(8, 32);
  EXPECT_FALSE(check_feature_domain(f).has_value());
  f[Feature::kGpuUtil] = 101.0;
  EXPECT_TRUE(check_feature_domain(f).has_value());
  f[Feature::kGpuUtil] = 50.0;
  f[Feature::kLatency] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(check_feature_domain(f).has_value());
  f[Feature::kLatency] = 0.1;
  f[Feature::kBatchSize] = 0.0;
  EXPECT_TRUE(check_feature_domain(f).has_value());
}

namespace {

std::vector<FeatureVector> one_feature(std::initializer_list<double> xs) {
  std::vector<FeatureVector> out;
  for (double x : xs) {
    FeatureVector f;
    f[Feature::kFlops] = x;
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST(Normalizer, PopulationStd) {
  const auto n = Normalizer::fit(one_feature({1, 2, 3}), FeatureSubset::kAll);
  EXPECT_DOUBLE_EQ(n.mean()[index_of(Feature::kFlops)], 2.0);
  EXPECT_NEAR(n.stddev()[index_of(Feature::kFlops)], std::sqrt(2.0 / 3.0), 1e-15);
  FeatureVector x;
  x[Feature::kFlops] = 3.0;
  EXPECT_NEAR(n.apply(x)[index_of(Feature::kFlops)], 1.224744871391589, 1e-12);
  x[Feature::kFlops] = 2.0;
  EXPECT_EQ(n.apply(x)[index_of(Feature::kFlops)], 0.0);
}

TEST(Normalizer, ZeroVarianceStoresUnitStd) {
  const auto n = Normalizer::fit(one_feature({5, 5, 5}), FeatureSubset::kAll);
  EXPECT_EQ(n.mean()[index_of(Feature::kFlops)], 5.0);
  EXPECT_EQ(n.stddev()[index_of(Feature::kFlops)], 1.0);
  FeatureVector x;
  x[Feature::kFlops] = 5.0;
  EXPECT_EQ(n.apply(x)[index_of(Feature::kFlops)], 0.0);
}

TEST(Normalizer, SingleSample) {
  FeatureVector f = oracle::features(8, 32);
  f[Feature::kFlops] = 7.0;
  const auto n = Normalizer::fit(std::vector{f}, FeatureSubset::kAll);
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    EXPECT_EQ(n.mean()[k], f.values[k]);
    EXPECT_EQ(n.stddev()[k], 1.0);
  }
}

TEST(Normalizer, SubsetDimension) {
  const auto n = Normalizer::fit(one_feature({1, 2}), FeatureSubset::kModelOnly);
  EXPECT_EQ(n.dimension(), 4u);
  EXPECT_EQ(n.apply(FeatureVector{}).size(), 4u);
  EXPECT_EQ(Normalizer::fit(one_feature({1, 2}), FeatureSubset::kResourceOnly).dimension(), 8u);
}

TEST(Normalizer, EmptyInputRejected) {
  EXPECT_THROW(Normalizer::fit(std::vector<FeatureVector>{}, FeatureSubset::kAll), ValidationError);
  EXPECT_THROW(fit_normalizer(std::vector<const Node*>{}, FeatureSubset::kAll), ValidationError);
}

TEST(Normalizer, StatsMatchIndependentComputation) {
  std::mt19937_64 rng(11);
  std::vector<FeatureVector> xs;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) {
    xs.push_back(oracle::features(8, 16.0 * (i % 4 + 1), &rng));
    rows.emplace_back(xs.back().values.begin(), xs.back().values.end());
  }
  const auto n = Normalizer::fit(xs, FeatureSubset::kAll);
  const auto ref = oracle::zscore_stats(rows);
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    EXPECT_NEAR(n.mean()[k], ref.mean[k], 1e-12 * std::max(1.0, std::abs(ref.mean[k])));
    EXPECT_NEAR(n.stddev()[k], ref.std[k], 1e-12 * std::max(1.0, ref.std[k]));
  }
}

// Property: after apply over the training set, every feature has mean 0 and
// population std 1 (0 for constant features).
TEST(Normalizer, TrainingSetIsStandardised) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FeatureVector> xs;
    for (int i = 0; i < 5 + trial; ++i) xs.push_back(oracle::features(8, 32, &rng));
    const auto n = Normalizer::fit(xs, FeatureSubset::kAll);
    std::vector<double> mean(kNumFeatures, 0.0), sq(kNumFeatures, 0.0);
    for (const auto& x : xs) {
      const auto z = n.apply(x);
      for (std::size_t k = 0; k < kNumFeatures; ++k) {
        mean[k] += z[k];
        sq[k] += z[k] * z[k];
      }
    }
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      const double m = mean[k] / static_cast<double>(xs.size());
      const double s = std::sqrt(sq[k] / static_cast<double>(xs.size()) - m * m);
      EXPECT_NEAR(m, 0.0, 1e-9);
      // batch_size and seq_len are constant here.
      EXPECT_NEAR(s, k < 2 ? 0.0 : 1.0, 1e-9) << kFeatureNames[k];
    }
  }
}

TEST(Normalizer, ApplyIsAffine) {
  std::mt19937_64 rng(5);
  std::vector<FeatureVector> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(oracle::features(8, 32, &rng));
  const auto n = Normalizer::fit(xs, FeatureSubset::kAll);
  for (int trial = 0; trial < 100; ++trial) {
    const FeatureVector x = oracle::features(8, 32, &rng), y = oracle::features(8, 32, &rng);
    const double a = std::uniform_real_distribution<double>(-2.0, 3.0)(rng);
    FeatureVector mix;
    for (std::size_t k = 0; k < kNumFeatures; ++k) mix.values[k] = a * x.values[k] + (1 - a) * y.values[k];
    const auto zm = n.apply(mix), zx = n.apply(x), zy = n.apply(y);
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      EXPECT_NEAR(zm[k], a * zx[k] + (1 - a) * zy[k], 1e-9 * (1 + std::abs(zm[k])));
    }
  }
}

TEST(Normalizer, ConstructorValidates) {
  EXPECT_THROW(Normalizer(FeatureSubset::kModelOnly, {0, 0, 0}, {1, 1, 1}), ValidationError);
  EXPECT_THROW(Normalizer(FeatureSubset::kModelOnly, {0, 0, 0, 0}, {1, 1, 0, 1}), ValidationError);
  EXPECT_NO_THROW(Normalizer(FeatureSubset::kModelOnly, {0, 0, 0, 0}, {1, 1, 2, 1}));
}
