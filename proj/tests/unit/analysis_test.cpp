#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "enertree/enertree.hpp"
#include "support/oracles.hpp"

using namespace enertree;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Bottleneck, TwoModulesSplitEvenly) {
  const ModelTree t = oracle::tree(
      "m", oracle::module("R:0", {oracle::module("A:0", {oracle::leaf("L:0", "Linear")}),
                                  oracle::module("B:0", {oracle::leaf("L:1", "Linear")})}));
  const PredictionMap p = {{"R:0", 10.0}, {"A:0", 5.0}, {"B:0", 5.0}, {"L:0", 5.0}, {"L:1", 5.0}};
  const auto shares = bottleneck_breakdown(std::span(&t, 1), std::span(&p, 1));
  ASSERT_EQ(shares.size(), 2u);
  EXPECT_EQ(shares[0], (BottleneckShare{"A", 50.0}));
  EXPECT_EQ(shares[1], (BottleneckShare{"B", 50.0}));
}

TEST(Bottleneck, SingleModuleTakesEverything) {
  const ModelTree t = oracle::tree(
      "m", oracle::module("R:0", {oracle::module("A:0", {oracle::leaf("L:0", "Linear"),
                                                          oracle::leaf("L:1", "GELU")})}));
  const PredictionMap p = {{"R:0", 8.0}, {"A:0", 8.0}, {"L:0", 3.0}, {"L:1", 5.0}};
  const auto shares = bottleneck_breakdown(std::span(&t, 1), std::span(&p, 1));
  ASSERT_EQ(shares.size(), 1u);
  EXPECT_DOUBLE_EQ(shares[0].percent, 100.0);
}

TEST(Bottleneck, MissingTypeCountsAsZeroAcrossTrees) {
  const ModelTree a = oracle::tree(
      "m", oracle::module("R:0", {oracle::module("A:0", {oracle::leaf("L:0", "Linear")})}));
  const ModelTree b = oracle::tree(
      "m", oracle::module("R:0", {oracle::module("B:0", {oracle::leaf("L:0", "Linear")})}));
  const std::vector<ModelTree> trees = {a, b};
  const std::vector<PredictionMap> preds = {{{"R:0", 1.0}, {"A:0", 1.0}, {"L:0", 1.0}},
                                            {{"R:0", 1.0}, {"B:0", 1.0}, {"L:0", 1.0}}};
  const auto shares = bottleneck_breakdown(trees, preds);
  ASSERT_EQ(shares.size(), 2u);
  EXPECT_DOUBLE_EQ(shares[0].percent, 50.0);
  EXPECT_DOUBLE_EQ(shares[1].percent, 50.0);
}

TEST(Bottleneck, MatchesBruteForceOnSyntheticTrees) {
  synthetic::Spec spec;
  spec.models = {synthetic::bert_base(), synthetic::distilbert(), synthetic::gpt2_small()};
  for (auto& m : spec.models) m.n_layers = 2;
  spec.batch_sizes = {8};
  spec.seq_lens = {32};
  spec.bias_min = 0.95;
  spec.bias_max = 1.05;
  const auto ds = synthetic::generate_dataset(spec);
  for (const ModelTree& t : ds.trees) {
    PredictionMap gt;
    for_each_node(t.root, [&](const Node& n) { gt[n.name] = *n.ground_truth_energy; });
    std::map<std::string, double> want;
    std::function<void(const Node&, bool)> walk = [&](const Node& n, bool root) {
      bool all_leaves = !n.children.empty();
      for (const Node& c : n.children) all_leaves = all_leaves && c.children.empty();
      if (!root && all_leaves) want[n.type_name] += 100.0 * gt[n.name] / gt[t.root.name];
      for (const Node& c : n.children) walk(c, false);
    };
    walk(t.root, true);
    const auto got = bottleneck_breakdown(std::span(&t, 1), std::span(&gt, 1));
    ASSERT_EQ(got.size(), want.size());
    for (const auto& s : got) EXPECT_NEAR(s.percent, want.at(s.type_name), 1e-9);
    double total = 0.0;
    for (const auto& s : renormalize(got)) total += s.percent;
    EXPECT_NEAR(total, 100.0, 1e-9);
  }
}

TEST(Bottleneck, RejectsMismatchedInputs) {
  const ModelTree t = oracle::tree("m", oracle::module("R:0", {oracle::leaf("L:0", "Linear")}));
  const std::vector<PredictionMap> none;
  EXPECT_THROW(bottleneck_breakdown(std::span(&t, 1), none), ValidationError);
  const PredictionMap empty;
  EXPECT_THROW(bottleneck_breakdown(std::span(&t, 1), std::span(&empty, 1)), ValidationError);
}

TEST(Power, BundledLogIntegratesTo102Joules) {
  const auto samples = parse_power_csv(read_file(std::string(ENERTREE_DATA_DIR) + "/power_log.csv"));
  ASSERT_EQ(samples.size(), 10u);
  EXPECT_NEAR(integrate_power(samples), 102.0, 1e-9);
}

TEST(Power, EmptyLogIsZero) { EXPECT_EQ(integrate_power({}), 0.0); }

TEST(Power, ConstantPowerIsPowerTimesDuration) {
  std::vector<PowerSample> s;
  for (int i = 0; i < 37; ++i) s.push_back({0.1 * i, 230.0, 2.0});
  EXPECT_NEAR(integrate_power(s, 0.1), 460.0 * 3.7, 1e-9);
}

TEST(Power, LinearAndAdditive) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<PowerSample> a, b, ab, scaled;
    const std::size_t n = 1 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) a.push_back({0.17 * i, u(rng), u(rng)});
    for (std::size_t i = 0; i < n; ++i) b.push_back({0.17 * (n + i), u(rng), u(rng)});
    ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double k = 0.5 + u(rng);
    for (auto s : a) {
      s.current *= k;
      scaled.push_back(s);
    }
    const double ea = integrate_power(a), eb = integrate_power(b);
    EXPECT_NEAR(integrate_power(ab), ea + eb, 1e-9 * (ea + eb));
    EXPECT_NEAR(integrate_power(scaled), k * ea, 1e-9 * k * ea);
  }
}

TEST(Power, RejectsBadInput) {
  EXPECT_THROW(integrate_power(std::vector<PowerSample>{{0.0, -1.0, 1.0}}), ValidationError);
  EXPECT_THROW(integrate_power(std::vector<PowerSample>{{1.0, 1.0, 1.0}, {0.5, 1.0, 1.0}}),
               ValidationError);
  EXPECT_THROW(integrate_power({}, 0.0), ValidationError);
  EXPECT_THROW(parse_power_csv("timestamp_s,voltage_v\n0,1\n"), Error);
}

TEST(Cost, PublishedDailyFigures) {
  // kWh totals priced at 0.1319 USD/kWh.
  const double queries = 1e6;
  const auto small = cost_of_queries(161.0 * kJoulesPerKwh / queries, queries, 0.1319);
  EXPECT_NEAR(small.kwh, 161.0, 1e-9);
  EXPECT_NEAR(small.usd, 21.24, 0.005);
  const auto large = cost_of_queries(24000.0 * kJoulesPerKwh / queries, queries, 0.1319);
  EXPECT_NEAR(large.kwh, 24000.0, 1e-6);
  EXPECT_NEAR(large.usd, 3165.6, 0.01);
}

TEST(Cost, ZeroQueriesCostNothing) {
  const auto c = cost_of_queries(5.0, 0.0, 0.1319);
  EXPECT_EQ(c.kwh, 0.0);
  EXPECT_EQ(c.usd, 0.0);
  EXPECT_THROW(cost_of_queries(-1.0, 1.0, 0.1), ValidationError);
}

TEST(Cost, ScalesLinearly) {
  const auto one = cost_of_queries(3.6e6, 1.0, 0.2);
  EXPECT_DOUBLE_EQ(one.kwh, 1.0);
  EXPECT_DOUBLE_EQ(one.usd, 0.2);
  EXPECT_DOUBLE_EQ(cost_of_queries(3.6e6, 7.0, 0.2).usd, 7.0 * 0.2);
}

TEST(Tradeoff, BundledCandidates) {
  const auto cs = parse_candidates_csv(read_file(std::string(ENERTREE_DATA_DIR) + "/candidates.csv"));
  ASSERT_EQ(cs.size(), 3u);
  EXPECT_EQ(tradeoff_select(cs, 5.0).model_name, "distilbert");
  EXPECT_EQ(tradeoff_select(cs, 6.0).model_name, "distilbert");
  EXPECT_EQ(tradeoff_select(cs, 15.0).model_name, "bert-base");
  EXPECT_THROW(tradeoff_select(cs, 3.0), ValidationError);
  EXPECT_THROW(tradeoff_select({}, 3.0), ValidationError);
}

TEST(Tradeoff, TiesGoToLowerEnergyThenName) {
  const std::vector<TradeoffCandidate> cs = {{"b", 90, 5, {}}, {"a", 90, 5, {}}, {"c", 90, 4, {}}};
  EXPECT_EQ(tradeoff_select(cs, 10.0).model_name, "c");
  const std::vector<TradeoffCandidate> same = {{"b", 90, 5, {}}, {"a", 90, 5, {}}};
  EXPECT_EQ(tradeoff_select(same, 10.0).model_name, "a");
}

TEST(Tradeoff, SelectionAndFrontMatchBruteForce) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<TradeoffCandidate> cs;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      cs.push_back({"m" + std::to_string(i), static_cast<double>(80 + rng() % 10),
                    static_cast<double>(1 + rng() % 10), {}});
    }
    const double budget = static_cast<double>(rng() % 12);
    const TradeoffCandidate* best = nullptr;
    for (const auto& c : cs) {
      if (c.predicted_energy > budget) continue;
      if (!best || c.accuracy > best->accuracy ||
          (c.accuracy == best->accuracy && (c.predicted_energy < best->predicted_energy ||
                                            (c.predicted_energy == best->predicted_energy &&
                                             c.model_name < best->model_name)))) {
        best = &c;
      }
    }
    if (best) {
      EXPECT_EQ(tradeoff_select(cs, budget), *best);
      for (const auto& c : cs) {
        if (c.predicted_energy <= budget) EXPECT_LE(c.accuracy, best->accuracy);
      }
    } else {
      EXPECT_THROW(tradeoff_select(cs, budget), ValidationError);
    }
    EXPECT_EQ(pareto_front(cs), oracle::pareto(cs));

    auto shuffled = cs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(pareto_front(shuffled), pareto_front(cs));
    if (best) EXPECT_EQ(tradeoff_select(shuffled, budget), *best);
  }
}
