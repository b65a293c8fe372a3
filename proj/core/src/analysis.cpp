#include "enertree/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "csv.hpp"
#include "enertree/error.hpp"

namespace enertree {
namespace {

double lookup(const PredictionMap& predictions, const std::string& name) {
  auto it = predictions.find(name);
  if (it == predictions.end()) throw ValidationError("no prediction for node '" + name + "'");
  return it->second;
}

bool parents_only_leaves(const Node& node) {
  return !node.is_leaf() &&
         std::all_of(node.children.begin(), node.children.end(),
                     [](const Node& c) { return c.is_leaf(); });
}

bool better(const TradeoffCandidate& a, const TradeoffCandidate& b) {
  if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
  if (a.predicted_energy != b.predicted_energy) return a.predicted_energy < b.predicted_energy;
  return a.model_name < b.model_name;
}

}  // namespace

std::vector<BottleneckShare> bottleneck_breakdown(std::span<const ModelTree> trees,
                                                  std::span<const PredictionMap> predictions) {
  if (trees.size() != predictions.size()) {
    throw ValidationError("bottleneck_breakdown: one prediction map per tree is required");
  }
  if (trees.empty()) throw ValidationError("bottleneck_breakdown: no trees");
  std::map<std::string, double> percent_sum;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const ModelTree& tree = trees[t];
    const double root = lookup(predictions[t], tree.root.name);
    std::map<std::string, double> group;
    for (const Node* module : nodes_at_level(tree, Level::kModule)) {
      if (!parents_only_leaves(*module)) continue;
      group[module->type_name] += lookup(predictions[t], module->name);
    }
    for (const auto& [type, joules] : group) percent_sum[type] += 100.0 * joules / root;
  }
  std::vector<BottleneckShare> out;
  out.reserve(percent_sum.size());
  for (const auto& [type, sum] : percent_sum) {
    out.push_back({type, sum / static_cast<double>(trees.size())});
  }
  return out;
}

std::vector<BottleneckShare> renormalize(std::span<const BottleneckShare> shares) {
  double total = 0.0;
  for (const auto& s : shares) total += s.percent;
  std::vector<BottleneckShare> out(shares.begin(), shares.end());
  if (total == 0.0) return out;
  for (auto& s : out) s.percent = 100.0 * s.percent / total;
  return out;
}

double integrate_power(std::span<const PowerSample> samples, double interval) {
  if (!(interval > 0.0) || !std::isfinite(interval)) {
    throw ValidationError("sampling interval must be positive");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PowerSample& s = samples[i];
    if (!(s.voltage >= 0.0) || !(s.current >= 0.0)) {
      throw ValidationError("power sample " + std::to_string(i) + " has a negative reading");
    }
    if (i > 0 && s.timestamp < samples[i - 1].timestamp) {
      throw ValidationError("power sample " + std::to_string(i) + " goes back in time");
    }
    total += s.voltage * s.current;
  }
  return total * interval;
}

std::vector<PowerSample> parse_power_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const std::size_t t = table.column("timestamp_s");
  const std::size_t v = table.column("voltage_v");
  const std::size_t a = table.column("current_a");
  if (t == std::string_view::npos || v == std::string_view::npos || a == std::string_view::npos) {
    throw ParseError("power log needs columns timestamp_s,voltage_v,current_a");
  }
  std::vector<PowerSample> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    out.push_back({csv::to_double(row[t], r, "timestamp_s"), csv::to_double(row[v], r, "voltage_v"),
                   csv::to_double(row[a], r, "current_a")});
  }
  return out;
}

QueryCost cost_of_queries(double energy_per_query_j, double n_queries, double usd_per_kwh) {
  if (energy_per_query_j < 0.0 || n_queries < 0.0 || usd_per_kwh < 0.0) {
    throw ValidationError("cost inputs must be non-negative");
  }
  QueryCost cost;
  cost.kwh = energy_per_query_j * n_queries / kJoulesPerKwh;
  cost.usd = cost.kwh * usd_per_kwh;
  return cost;
}

TradeoffCandidate tradeoff_select(std::span<const TradeoffCandidate> candidates,
                                  double energy_budget) {
  if (candidates.empty()) throw ValidationError("tradeoff_select: no candidates");
  const TradeoffCandidate* best = nullptr;
  for (const auto& c : candidates) {
    if (c.predicted_energy > energy_budget) continue;
    if (!best || better(c, *best)) best = &c;
  }
  if (!best) throw ValidationError("no candidate fits the energy budget");
  return *best;
}

std::vector<TradeoffCandidate> pareto_front(std::span<const TradeoffCandidate> candidates) {
  std::vector<TradeoffCandidate> front;
  for (const auto& c : candidates) {
    const bool dominated = std::any_of(candidates.begin(), candidates.end(), [&](const auto& o) {
      return o.predicted_energy <= c.predicted_energy && o.accuracy > c.accuracy;
    });
    if (!dominated) front.push_back(c);
  }
  std::sort(front.begin(), front.end(), [](const auto& a, const auto& b) {
    if (a.predicted_energy != b.predicted_energy) return a.predicted_energy < b.predicted_energy;
    return a.model_name < b.model_name;
  });
  return front;
}

std::vector<TradeoffCandidate> parse_candidates_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const std::size_t name = table.column("model_name");
  const std::size_t acc = table.column("accuracy");
  const std::size_t energy = table.column("predicted_energy_j");
  const std::size_t truth = table.column("ground_truth_energy_j");
  if (name == std::string_view::npos || acc == std::string_view::npos ||
      energy == std::string_view::npos) {
    throw ParseError("candidates CSV needs columns model_name,accuracy,predicted_energy_j");
  }
  std::vector<TradeoffCandidate> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    TradeoffCandidate c;
    c.model_name = row[name];
    c.accuracy = csv::to_double(row[acc], r, "accuracy");
    c.predicted_energy = csv::to_double(row[energy], r, "predicted_energy_j");
    if (!(c.predicted_energy > 0.0)) {
      throw ValidationError("candidate '" + c.model_name + "' must have positive energy");
    }
    if (truth != std::string_view::npos && !row[truth].empty()) {
      c.ground_truth_energy = csv::to_double(row[truth], r, "ground_truth_energy_j");
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace enertree
