#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enertree/model_tree.hpp"

namespace enertree {

struct BottleneckShare {
  std::string type_name;
  double percent = 0.0;

  friend bool operator==(const BottleneckShare&, const BottleneckShare&) = default;
};

// Share of the root prediction taken by modules that directly parent ML
// leaves (every child a leaf), grouped by type_name. With several trees the
// per-tree percentages are averaged, a type missing from a tree counting as
// 0. Sorted by type_name. ValidationError on missing predictions or a
// tree/prediction count mismatch.
std::vector<BottleneckShare> bottleneck_breakdown(std::span<const ModelTree> trees,
                                                  std::span<const PredictionMap> predictions);

// Same shares scaled to sum to 100.
std::vector<BottleneckShare> renormalize(std::span<const BottleneckShare> shares);

inline constexpr double kDefaultSampleInterval = 0.17;  // seconds

struct PowerSample {
  double timestamp = 0.0;  // s
  double voltage = 0.0;    // V
  double current = 0.0;    // A

  friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

// sum_t V_t I_t * interval. ValidationError on negative readings,
// decreasing timestamps or a non-positive interval.
double integrate_power(std::span<const PowerSample> samples,
                       double interval = kDefaultSampleInterval);

// CSV timestamp_s,voltage_v,current_a
std::vector<PowerSample> parse_power_csv(std::string_view text);

inline constexpr double kJoulesPerKwh = 3.6e6;

struct QueryCost {
  double kwh = 0.0;
  double usd = 0.0;
};

QueryCost cost_of_queries(double energy_per_query_j, double n_queries, double usd_per_kwh);

struct TradeoffCandidate {
  std::string model_name;
  double accuracy = 0.0;
  double predicted_energy = 0.0;  // J
  std::optional<double> ground_truth_energy;

  friend bool operator==(const TradeoffCandidate&, const TradeoffCandidate&) = default;
};

// Most accurate candidate whose predicted energy fits the budget; ties go to
// lower energy, then to the lexicographically smaller name. ValidationError
// when nothing fits or the list is empty.
TradeoffCandidate tradeoff_select(std::span<const TradeoffCandidate> candidates,
                                  double energy_budget);

// Candidates no other candidate dominates (energy <= and accuracy >),
// sorted by energy then name.
std::vector<TradeoffCandidate> pareto_front(std::span<const TradeoffCandidate> candidates);

// CSV model_name,accuracy,predicted_energy_j[,ground_truth_energy_j]
std::vector<TradeoffCandidate> parse_candidates_csv(std::string_view text);

}  // namespace enertree
