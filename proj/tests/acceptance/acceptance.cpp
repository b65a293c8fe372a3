// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "enertree/enertree.hpp"
#include "enertree_cli/cli.hpp"
#include "support/oracles.hpp"

using namespace enertree;
namespace fs = std::filesystem;

namespace {

const std::string kData = ENERTREE_DATA_DIR;

// Collects the first few problems of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (messages_.size() < 5) messages_.push_back(what);
  }
  void near_rel(double got, double want, double rel, const std::string& what) {
    const double scale = std::max(std::abs(want), 1e-300);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: got %.12g want %.12g", what.c_str(), got, want);
    expect(std::abs(got - want) <= rel * scale, buf);
  }
  void near_abs(double got, double want, double tol, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: got %.12g want %.12g", what.c_str(), got, want);
    expect(std::abs(got - want) <= tol, buf);
  }
  void note(const std::string& s) { notes_.push_back(s); }

  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::string s;
    for (const auto& m : messages_) s += (s.empty() ? "" : "; ") + m;
    if (failures_ > static_cast<int>(messages_.size())) {
      s += " (+" + std::to_string(failures_ - static_cast<int>(messages_.size())) + " more)";
    }
    return s;
  }
  std::string notes() const {
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : ", ") + n;
    return s;
  }

 private:
  int failures_ = 0;
  std::vector<std::string> messages_;
  std::vector<std::string> notes_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

TreeRegressorParams flat_params(double bias) {
  TreeRegressorParams p = zero_params(
      Normalizer(FeatureSubset::kAll, std::vector<double>(kNumFeatures, 0.0),
                 std::vector<double>(kNumFeatures, 1.0)));
  p.bias = bias;
  return p;
}

TreeRegressorParams random_params(std::mt19937_64& rng, const ModelTree& t, double scale) {
  std::vector<const Node*> nodes;
  for_each_node(t.root, [&](const Node& n) { nodes.push_back(&n); });
  TreeRegressorParams p = zero_params(fit_normalizer(nodes, FeatureSubset::kAll));
  std::normal_distribution<double> g(0.0, scale);
  for (double& w : p.weights) w = g(rng);
  p.bias = g(rng);
  return p;
}

// ---- 1

Check formula_exactness() {
  Check c;
  const double tol = 1e-9;
  c.near_rel(error_pct(110, 100), 10.0, tol, "error_pct(110,100)");
  c.near_abs(error_pct(100, 100), 0.0, 0.0, "error_pct(100,100)");
  c.near_rel(error_pct(50, 100), 50.0, tol, "error_pct(50,100)");

  const Node child = oracle::leaf("A:0", "Linear");
  c.near_rel(alpha(flat_params(0.0), child), 1.0, tol, "alpha(W=0,b=0)");
  c.near_rel(alpha(flat_params(1e3), child), 1.1, tol, "alpha(+inf limit)");
  c.near_rel(alpha(flat_params(std::atanh(0.5)), child), 1.05, tol, "alpha(atanh 0.5)");

  const ModelTree two_leaves = oracle::tree(
      "m", oracle::module("R:0", {oracle::module("M:0", {oracle::leaf("A:0", "Linear"),
                                                          oracle::leaf("B:0", "Linear")})}));
  const auto sum = predict_sum(two_leaves, {{"A:0", 2.0}, {"B:0", 3.0}});
  c.near_rel(sum.at("M:0"), 5.0, tol, "predict_sum module");
  c.near_rel(sum.at("R:0"), 5.0, tol, "predict_sum root");
  const ModelTree single = oracle::tree("m", oracle::module("R:0", {oracle::leaf("A:0", "Linear")}));
  c.near_rel(predict_sum(single, {{"A:0", 7.0}}).at("R:0"), 7.0, tol, "predict_sum single leaf");
  const ModelTree pair = oracle::tree("m", oracle::module("M:0", {oracle::leaf("A:0", "Linear"),
                                                                 oracle::leaf("B:0", "Linear")}));
  c.near_rel(end2end_predict(flat_params(std::atanh(0.5)), pair, {{"A:0", 2.0}, {"B:0", 2.0}}).at("M:0"),
             4.2, tol, "end2end alpha 1.05 over {2,2}");

  const auto zero = flat_params(0.0);
  const ModelTree one = oracle::tree("m", oracle::module("R:0", {oracle::leaf("A:0", "Linear", 2.0)}, 1.0));
  c.near_rel(tree_loss(zero, one, {{"A:0", 2.0}}), 1.0, tol, "tree_loss (2,1)");
  const ModelTree exact = oracle::tree("m", oracle::module("R:0", {oracle::leaf("A:0", "Linear", 2.0)}, 2.0));
  c.near_abs(tree_loss(zero, exact, {{"A:0", 2.0}}), 0.0, 0.0, "tree_loss P=G");
  const ModelTree nested = oracle::tree(
      "m", oracle::module("R:0", {oracle::module("M:0", {oracle::leaf("A:0", "Linear")}, 1.0),
                                  oracle::leaf("B:0", "Linear")},
                          2.0));
  c.near_rel(tree_loss(zero, nested, {{"A:0", 2.0}, {"B:0", 1.0}}), 1.25, tol, "tree_loss (2,1),(3,2)");

  const ResourceTrace gpu{{{"python", 0, 0, 1.0, 0, 0, 10.0}}};
  c.near_rel(utilization_energy(gpu), 10.0, tol, "utilization_energy PUE 1");
  c.near_rel(utilization_energy(gpu, {2.0}), 20.0, tol, "utilization_energy PUE 2");
  c.near_rel(utilization_energy(ResourceTrace{{{"python", 0.5, 0.5, 0, 2.0, 4.0, 0}}}), 3.0, tol,
             "utilization_energy cpu+dram");
  c.near_abs(utilization_energy(ResourceTrace{}), 0.0, 0.0, "utilization_energy empty");

  std::ifstream log(kData + "/power_log.csv");
  std::stringstream ss;
  ss << log.rdbuf();
  c.near_rel(integrate_power(parse_power_csv(ss.str())), 102.0, tol, "integrate_power bundled log");
  c.near_abs(integrate_power({}), 0.0, 0.0, "integrate_power empty");
  std::vector<PowerSample> steady;
  for (int i = 0; i < 40; ++i) steady.push_back({0.25 * i, 100.0, 2.0});
  c.near_rel(integrate_power(steady, 0.25), 200.0 * 10.0, tol, "integrate_power P*T");

  const double queries = 1e6;
  const auto small = cost_of_queries(161.0 * kJoulesPerKwh / queries, queries, 0.1319);
  c.near_rel(small.kwh, 161.0, tol, "cost kWh 161");
  c.near_abs(small.usd, 21.24, 0.01, "cost USD 161 kWh");
  const auto large = cost_of_queries(24000.0 * kJoulesPerKwh / queries, queries, 0.1319);
  c.near_rel(large.kwh, 24000.0, tol, "cost kWh 24000");
  c.near_abs(large.usd, 3165.6, 0.01, "cost USD 24000 kWh");
  c.expect(std::floor(large.usd) == 3165.0, "24000 kWh does not land on the published 3,165 USD");
  return c;
}

// ---- 2

Check alpha_bound() {
  Check c;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 25.0);
  double lo = 2.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    TreeRegressorParams p = flat_params(g(rng));
    for (double& w : p.weights) w = g(rng);
    const Node n = oracle::leaf("A:0", "Linear", {}, oracle::features(1 + rng() % 64, 1 + rng() % 512, &rng));
    const double a = alpha(p, n);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    c.expect(a >= 0.9 && a <= 1.1, "alpha " + fmt(a) + " outside [0.9, 1.1]");
  }
  c.note("10000 draws, alpha in [" + fmt(lo) + ", " + fmt(hi) + "]");
  return c;
}

// ---- 3

Check zero_equivalence() {
  Check c;
  std::mt19937_64 rng(3);
  std::vector<ModelTree> trees;
  synthetic::Spec spec;
  spec.models = synthetic::default_models();
  for (auto& m : spec.models) m.n_layers = 1 + static_cast<int>(rng() % 3);
  spec.batch_sizes = {8, 16, 24, 32};
  spec.seq_lens = {32, 64, 96, 128};
  spec.bias_min = 0.95;
  spec.bias_max = 1.05;
  spec.seed = 3;
  for (auto& t : synthetic::generate_dataset(spec).trees) trees.push_back(std::move(t));
  trees.resize(std::min<std::size_t>(trees.size(), 50));
  while (trees.size() < 100) trees.push_back(oracle::random_tree(rng, 6, 60));

  std::size_t nodes = 0;
  for (const ModelTree& t : trees) {
    std::vector<const Node*> all;
    for_each_node(t.root, [&](const Node& n) { all.push_back(&n); });
    const auto p = zero_params(fit_normalizer(all, FeatureSubset::kAll));
    const auto leaves = oracle::ground_truth_leaves(t);
    const auto a = end2end_predict(p, t, leaves);
    const auto b = predict_sum(t, leaves);
    c.expect(a == b, "end2end(W=0,b=0) differs from predict_sum on " + t.model_name);
    nodes += a.size();
  }
  c.note(std::to_string(trees.size()) + " trees, " + std::to_string(nodes) + " nodes");
  return c;
}

// ---- 4

Check gradient_check() {
  Check c;
  std::mt19937_64 rng(4);
  const double h = 1e-5;
  double worst = 0.0;
  int trees = 0;
  for (; trees < 25; ++trees) {
    const ModelTree t = oracle::random_tree(rng, 4, 30);
    const auto p = random_params(rng, t, 0.5);
    auto leaves = oracle::ground_truth_leaves(t);
    for (auto& [name, v] : leaves) v *= 0.7 + 0.6 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto g = tree_loss_gradient(p, t, leaves);
    auto compare = [&](double analytic, double numeric, const std::string& what) {
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / scale;
      worst = std::max(worst, rel);
      c.expect(rel <= 1e-4, what + " relative error " + fmt(rel));
    };
    for (std::size_t k = 0; k < p.weights.size(); ++k) {
      auto plus = p, minus = p;
      plus.weights[k] += h;
      minus.weights[k] -= h;
      compare(g.d_weights[k], (tree_loss(plus, t, leaves) - tree_loss(minus, t, leaves)) / (2 * h),
              "dW[" + std::to_string(k) + "]");
    }
    auto plus = p, minus = p;
    plus.bias += h;
    minus.bias -= h;
    compare(g.d_bias, (tree_loss(plus, t, leaves) - tree_loss(minus, t, leaves)) / (2 * h), "db");
  }
  c.note(std::to_string(trees) + " trees, worst relative error " + fmt(worst));
  return c;
}

// ---- 5

Check oracle_recovery() {
  Check c;
  const Scenario sc = load_scenario(kData + "/scenarios/exact_linear.json");
  c.expect(sc.spec.bias_min == 1.0 && sc.spec.bias_max == 1.0, "scenario beta is not 1");
  c.expect(sc.spec.models.size() >= 4, "fewer than 4 models");
  c.expect(sc.spec.batch_sizes.size() * sc.spec.seq_lens.size() == 28, "grid is not 28 input sizes");
  const auto ds = synthetic::generate_dataset(sc.spec);
  EvalConfig cfg;
  cfg.kind = RegressorKind::kEnd2End;
  cfg.hyper = sc.hyper;
  cfg.parallel_folds = true;
  const auto report = run_eval(ds.trees, cfg);
  const double ml = report.average.ml.value_or(1e9);
  const double model = report.average.model.value_or(1e9);
  c.expect(ml < 0.1, "ML-level error " + fmt(ml) + "% >= 0.1%");
  c.expect(model < 1.0, "model-level error " + fmt(model) + "% >= 1%");
  c.note(std::to_string(sc.spec.models.size()) + " models x 28 sizes, ml " + fmt(ml) + "%, model " +
         fmt(model) + "%");
  return c;
}

// ---- 6

Check regressor_ordering() {
  Check c;
  const Scenario sc = load_scenario(kData + "/scenarios/biased_beta.json");
  const auto ds = synthetic::generate_dataset(sc.spec);
  EvalConfig cfg;
  cfg.hyper = sc.hyper;
  cfg.parallel_folds = true;
  const auto rows = ablate_regressors(ds.trees, cfg);
  std::map<std::string, LevelErrors> by;
  for (const auto& r : rows) by[r.label] = r.errors;
  for (Level level : {Level::kModule, Level::kModel}) {
    const std::string ln(to_string(level));
    const double e2e = *by["end2end"].at(level);
    const double step = *by["stepwise"].at(level);
    const double psum = *by["predicted_sum"].at(level);
    const double uns = *by["unstructured"].at(level);
    c.expect(e2e < psum, ln + ": end2end " + fmt(e2e) + " not below predicted_sum " + fmt(psum));
    c.expect(uns > e2e && uns > step && uns > psum, ln + ": unstructured " + fmt(uns) + " not worst");
    c.note(ln + " e2e " + fmt(e2e) + " step " + fmt(step) + " psum " + fmt(psum) + " unstr " + fmt(uns));
  }
  const double e2e = *by["end2end"].model, step = *by["stepwise"].model;
  c.expect(step >= e2e, "model: stepwise " + fmt(step) + " below end2end " + fmt(e2e));
  return c;
}

// ---- 7

Check feature_ablation() {
  Check c;
  const Scenario sc = load_scenario(kData + "/scenarios/feature_ablation.json");
  const auto& used = sc.spec.leaf_energy_features;
  const bool flops = std::find(used.begin(), used.end(), Feature::kFlops) != used.end();
  const bool resource = std::any_of(used.begin(), used.end(), [](Feature f) { return !is_model_feature(f); });
  c.expect(flops && resource, "scenario leaf energy does not combine flops with a resource feature");
  const auto ds = synthetic::generate_dataset(sc.spec);
  EvalConfig cfg;
  cfg.hyper = sc.hyper;
  cfg.parallel_folds = true;
  const auto rows = ablate_features(ds.trees, cfg);
  std::map<std::string, double> model;
  for (const auto& r : rows) model[r.label] = *r.errors.model;
  c.expect(model["all"] <= model["model_only"],
           "all " + fmt(model["all"]) + " > model_only " + fmt(model["model_only"]));
  c.expect(model["all"] <= model["resource_only"],
           "all " + fmt(model["all"]) + " > resource_only " + fmt(model["resource_only"]));
  c.note("model-level all " + fmt(model["all"]) + " model_only " + fmt(model["model_only"]) +
         " resource_only " + fmt(model["resource_only"]));
  return c;
}

// ---- 8

using Snapshot = std::map<std::string, std::string>;

Snapshot snapshot_dir(const fs::path& dir) {
  Snapshot s;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    s[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return s;
}

Check cli_reproducibility() {
  Check c;
  const fs::path root = fs::temp_directory_path() / ("enertree-acceptance-" + std::to_string(::getpid()));
  const fs::path out = root / "out";
  const std::string o = out.string();
  const std::string trees = o + "/trees";
  const std::vector<std::vector<std::string>> commands = {
      {"-o", o, "synth", "--scenario", kData + "/scenarios/biased_beta.json", "--layers", "1", "--seed", "5"},
      {"-o", o, "validate", trees},
      {"-o", o, "train", trees, "--regressor", "end2end", "--epochs", "100", "--seed", "5"},
      {"-o", o, "predict", trees, "--leaves", o + "/leaf_regressors.json", "--model", o + "/tree_model.json"},
      {"-o", o, "eval", trees, "--loo", "--regressor", "end2end", "--epochs", "50", "--seed", "5"},
      {"-o", o, "ablate-features", trees, "--epochs", "30", "--seed", "5"},
      {"-o", o, "ablate-regressors", trees, "--epochs", "30", "--seed", "5"},
      {"-o", o, "bottleneck", trees, "--leaves", o + "/leaf_regressors.json", "--model", o + "/tree_model.json"},
      {"-o", o, "tradeoff", "--candidates", kData + "/candidates.csv", "--budget", "10"},
      {"-o", o, "cost", "--energy-per-query", "579.6", "--queries", "1000000"},
      {"-o", o, "integrate-power", kData + "/power_log.csv"},
  };
  std::vector<Snapshot> runs;
  std::vector<std::vector<std::string>> stdouts;
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(root);
    fs::create_directories(root);
    std::vector<std::string> outs;
    Snapshot combined;
    for (const auto& args : commands) {
      std::ostringstream so, se;
      const int code = cli::run(args, so, se);
      c.expect(code == 0, args[2] + " exited " + std::to_string(code) + ": " + se.str());
      outs.push_back(so.str());
      // Per-command view so a later command overwriting a file still counts.
      for (auto& [path, bytes] : snapshot_dir(out)) combined[args[2] + ":" + path] = std::move(bytes);
    }
    runs.push_back(std::move(combined));
    stdouts.push_back(std::move(outs));
  }
  fs::remove_all(root);
  std::set<std::string> names;
  for (const auto& [k, v] : runs[0]) names.insert(k);
  for (const auto& [k, v] : runs[1]) names.insert(k);
  for (const std::string& k : names) {
    auto a = runs[0].find(k), b = runs[1].find(k);
    c.expect(a != runs[0].end() && b != runs[1].end() && a->second == b->second, "differs: " + k);
  }
  for (std::size_t i = 0; i < commands.size(); ++i) {
    c.expect(stdouts[0][i] == stdouts[1][i], commands[i][2] + " summary differs");
  }
  std::set<std::string> files;
  for (const auto& [k, v] : runs[0]) files.insert(k.substr(k.find(':') + 1));
  c.note(std::to_string(commands.size()) + " subcommands, " + std::to_string(files.size()) +
         " distinct output files");
  return c;
}

// ---- 9

Check loo_hygiene() {
  Check c;
  const Scenario sc = load_scenario(kData + "/scenarios/biased_beta.json");
  auto spec = sc.spec;
  for (auto& m : spec.models) m.n_layers = 1;
  spec.batch_sizes = {8, 16};
  spec.seq_lens = {32, 128};
  const auto ds = synthetic::generate_dataset(spec);

  const auto folds = loo_splits(ds.trees);
  std::set<std::string> names;
  for (const auto& t : ds.trees) names.insert(t.model_name);
  c.expect(folds.size() == names.size(), "fold count differs from model count");
  std::vector<int> tested(ds.trees.size(), 0);
  for (const Fold& f : folds) {
    for (std::size_t i : f.train) {
      c.expect(ds.trees[i].model_name != f.held_out_model,
               "fold " + f.held_out_model + " trains on its own model");
    }
    for (std::size_t i : f.test) {
      c.expect(ds.trees[i].model_name == f.held_out_model, "fold " + f.held_out_model + " tests a foreign tree");
      ++tested[i];
    }
  }
  c.expect(std::all_of(tested.begin(), tested.end(), [](int n) { return n == 1; }),
           "a tree is not tested exactly once");

  // Behavioural check: relabelling a model's own trees cannot change its
  // held-out predictions.
  EvalConfig cfg;
  cfg.hyper = sc.hyper;
  cfg.hyper.epochs = 100;
  cfg.parallel_folds = true;
  for (RegressorKind kind : {RegressorKind::kEnd2End, RegressorKind::kStepWise, RegressorKind::kUnstructured}) {
    cfg.kind = kind;
    const auto base = run_eval(ds.trees, cfg);
    for (const std::string& victim : names) {
      auto poisoned = ds.trees;
      for (auto& t : poisoned) {
        if (t.model_name != victim) continue;
        std::function<void(Node&)> scale = [&](Node& n) {
          n.ground_truth_energy = *n.ground_truth_energy * 3.0;
          for (Node& ch : n.children) scale(ch);
        };
        scale(t.root);
      }
      const auto report = run_eval(poisoned, cfg);
      for (std::size_t i = 0; i < report.records.size(); ++i) {
        if (report.records[i].model_name != victim) continue;
        c.expect(report.records[i].predicted == base.records[i].predicted,
                 std::string(to_string(kind)) + ": prediction for " + victim + " depends on its own labels");
      }
    }
  }
  c.note(std::to_string(folds.size()) + " folds");
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"formula exactness", formula_exactness},
      {"alpha bound", alpha_bound},
      {"zero-parameter equivalence", zero_equivalence},
      {"gradient check", gradient_check},
      {"oracle recovery", oracle_recovery},
      {"regressor ablation ordering", regressor_ordering},
      {"feature ablation direction", feature_ablation},
      {"CLI reproducibility", cli_reproducibility},
      {"leave-one-model-out hygiene", loo_hygiene},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char head[96];
    std::snprintf(head, sizeof head, "%s [%zu] %s (%.1fs)", c.ok() ? "PASS" : "FAIL", i + 1,
                  criteria[i].first.c_str(), secs);
    std::cout << head;
    if (!c.notes().empty()) std::cout << ": " << c.notes();
    if (!c.ok()) std::cout << " -- " << c.summary();
    std::cout << std::endl;
    if (!c.ok()) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
