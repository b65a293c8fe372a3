#include "enertree_cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "enertree/enertree.hpp"

namespace enertree::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw UsageError("failed writing " + path.string());
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json opt(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json levels_json(const LevelErrors& e) {
  ordered_json j;
  for (Level l : kAllLevels) j[std::string(to_string(l))] = opt(e.at(l));
  return j;
}

// Files as given; directories contribute their *.json entries, sorted.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw UsageError("no such file or directory: " + in);
    }
  }
  if (out.empty()) throw UsageError("no tree files among the inputs");
  return out;
}

std::vector<ModelTree> load_trees(const std::vector<fs::path>& paths) {
  std::vector<ModelTree> trees;
  trees.reserve(paths.size());
  for (const auto& p : paths) {
    try {
      trees.push_back(parse_tree(read_file(p)));
    } catch (const ParseError& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  }
  return trees;
}

// <dir>/<stem>.json -> <dir>/<stem>.trace.csv
fs::path trace_path_for(const fs::path& tree_path) {
  return tree_path.parent_path() / (tree_path.stem().string() + ".trace.csv");
}

std::vector<ResourceTrace> load_traces(const std::vector<fs::path>& paths) {
  std::vector<ResourceTrace> traces;
  for (const auto& p : paths) {
    const fs::path t = trace_path_for(p);
    if (!fs::is_regular_file(t)) {
      throw ValidationError("no resource trace " + t.string() + " for " + p.string());
    }
    traces.push_back(parse_trace_csv(read_file(t)));
  }
  return traces;
}

bool all_traces_exist(const std::vector<fs::path>& paths) {
  return std::all_of(paths.begin(), paths.end(),
                     [](const fs::path& p) { return fs::is_regular_file(trace_path_for(p)); });
}

struct HyperOpts {
  std::string scenario;
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> subset;
  std::optional<int> patience;
};

void add_hyper(CLI::App* app, HyperOpts& h) {
  app->add_option("--scenario", h.scenario, "Scenario file supplying training defaults")
      ->check(CLI::ExistingFile);
  app->add_option("--lr", h.lr, "Adam learning rate (default 0.001)");
  app->add_option("--epochs", h.epochs, "Maximum training epochs (default 500)");
  app->add_option("--tau", h.tau, "Temperature of the child weights (default 10)");
  app->add_option("--seed", h.seed, "Top-level seed");
  app->add_option("--subset", h.subset, "Feature subset: all, model_only, resource_only");
  app->add_option("--patience", h.patience, "Early-stop window in epochs (0 disables)");
}

TrainHyper resolve(const HyperOpts& h) {
  TrainHyper hyper = h.scenario.empty() ? TrainHyper{} : load_scenario(h.scenario).hyper;
  if (h.lr) hyper.learning_rate = *h.lr;
  if (h.epochs) hyper.epochs = *h.epochs;
  if (h.tau) hyper.tau = *h.tau;
  if (h.seed) hyper.seed = *h.seed;
  if (h.subset) {
    try {
      hyper.subset = parse_subset(*h.subset);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (h.patience) hyper.patience = *h.patience;
  return hyper;
}

RegressorKind kind_arg(const std::string& text) {
  try {
    return parse_regressor_kind(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

ordered_json hyper_json(const TrainHyper& h) {
  ordered_json j;
  j["learning_rate"] = h.learning_rate;
  j["epochs"] = h.epochs;
  j["tau"] = h.tau;
  j["seed"] = h.seed;
  j["subset"] = std::string(to_string(h.subset));
  return j;
}

ordered_json candidate_json(const TradeoffCandidate& c) {
  ordered_json j;
  j["model_name"] = c.model_name;
  j["accuracy"] = c.accuracy;
  j["predicted_energy_j"] = c.predicted_energy;
  j["ground_truth_energy_j"] = opt(c.ground_truth_energy);
  return j;
}

struct Ctx {
  fs::path out_dir;
  ordered_json summary;
};

// ---- subcommands

struct SynthOpts {
  std::string scenario;
  std::optional<int> layers;
  std::optional<std::uint64_t> seed;
  std::optional<double> bias_min;
  std::optional<double> bias_max;
};

void cmd_synth(const SynthOpts& o, Ctx& ctx) {
  Scenario sc;
  if (!o.scenario.empty()) {
    sc = load_scenario(o.scenario);
  } else {
    sc.spec.models = synthetic::default_models();
  }
  if (o.layers) {
    if (*o.layers < 1) throw UsageError("--layers must be at least 1");
    for (auto& m : sc.spec.models) m.n_layers = *o.layers;
  }
  if (o.seed) {
    sc.spec.seed = *o.seed;
    sc.hyper.seed = *o.seed;
  }
  if (o.bias_min) sc.spec.bias_min = *o.bias_min;
  if (o.bias_max) sc.spec.bias_max = *o.bias_max;

  const synthetic::Dataset ds = synthetic::generate_dataset(sc.spec);
  std::size_t nodes = 0;
  for (const ModelTree& t : ds.trees) {
    const std::string stem = synthetic::tree_stem(t);
    write_file(ctx.out_dir / "trees" / (stem + ".json"), serialize_tree(t));
    write_file(ctx.out_dir / "trees" / (stem + ".trace.csv"),
               serialize_trace_csv(synthetic::make_trace(t, sc.spec.seed)));
    nodes += node_count(t);
  }
  write_file(ctx.out_dir / "oracle.json", synthetic::serialize_oracle(ds.oracle));
  write_file(ctx.out_dir / "scenario.json", serialize_scenario(sc));
  ctx.summary["models"] = sc.spec.models.size();
  ctx.summary["trees"] = ds.trees.size();
  ctx.summary["nodes"] = nodes;
  ctx.summary["seed"] = sc.spec.seed;
}

struct TrainOpts {
  std::vector<std::string> inputs;
  std::string regressor = "end2end";
  bool fallback_generic = false;
  HyperOpts hyper;
};

void cmd_train(const TrainOpts& o, Ctx& ctx) {
  const RegressorKind kind = kind_arg(o.regressor);
  if (kind == RegressorKind::kBaseline) {
    throw UsageError("baseline has no trainable parameters; use eval --regressor baseline");
  }
  const TrainHyper hyper = resolve(o.hyper);
  const auto trees = load_trees(expand_inputs(o.inputs));
  const PrimitiveRegressorSet leaves =
      train_leaf_regressors(trees, {hyper.subset, o.fallback_generic});
  const std::string leaf_doc = serialize_leaf_regressors(leaves);
  TrainStats stats;
  TreeModel model = train_tree_model(trees, leaves, kind, hyper, &stats);
  model.leaf_regressors_hash = content_hash(leaf_doc);
  write_file(ctx.out_dir / "leaf_regressors.json", leaf_doc);
  write_file(ctx.out_dir / "tree_model.json", serialize_tree_model(model));
  ctx.summary["regressor"] = std::string(to_string(kind));
  ctx.summary["trees"] = trees.size();
  ctx.summary["primitives"] = leaves.primitives.size();
  ctx.summary["leaf_regressors_hash"] = model.leaf_regressors_hash;
  if (kind == RegressorKind::kEnd2End || kind == RegressorKind::kStepWise) {
    ctx.summary["epochs_run"] = stats.epochs_run;
    ctx.summary["initial_loss"] = stats.initial_loss;
    ctx.summary["final_loss"] = stats.final_loss;
  }
}

struct Predictor {
  PrimitiveRegressorSet leaves;
  std::optional<TreeModel> model;
  LeafPredictOptions leaf_opts;

  PredictionMap operator()(const ModelTree& tree) const {
    const PredictionMap lp = predict_leaves(leaves, tree, leaf_opts);
    return model ? predict_tree(*model, tree, lp) : predict_sum(tree, lp);
  }
  std::string kind() const {
    return std::string(to_string(model ? model->kind : RegressorKind::kPredictedSum));
  }
};

Predictor load_predictor(const std::string& leaves_path, const std::string& model_path,
                         std::optional<double> floor) {
  Predictor p;
  const std::string leaf_doc = read_file(leaves_path);
  p.leaves = parse_leaf_regressors(leaf_doc);
  p.leaf_opts.floor = floor;
  if (!model_path.empty()) {
    p.model = parse_tree_model(read_file(model_path));
    if (!p.model->leaf_regressors_hash.empty() &&
        p.model->leaf_regressors_hash != content_hash(leaf_doc)) {
      throw ValidationError("tree model " + model_path +
                            " was trained against different leaf regressors than " + leaves_path);
    }
  }
  return p;
}

struct PredictOpts {
  std::vector<std::string> inputs;
  std::string leaves;
  std::string model;
  std::optional<double> floor;
};

void cmd_predict(const PredictOpts& o, Ctx& ctx) {
  const Predictor predictor = load_predictor(o.leaves, o.model, o.floor);
  const auto paths = expand_inputs(o.inputs);
  const auto trees = load_trees(paths);
  ordered_json roots = ordered_json::object();
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const ModelTree& tree = trees[i];
    const PredictionMap preds = predictor(tree);
    const std::string stem = paths[i].stem().string();

    ordered_json j;
    j["model_name"] = tree.model_name;
    j["batch_size"] = tree.input_size.batch_size;
    j["seq_len"] = tree.input_size.seq_len;
    j["regressor"] = predictor.kind();
    ordered_json pj = ordered_json::object();
    std::string csv = "node,level,predicted_j,ground_truth_j\n";
    for_each_node(tree.root, [&](const Node& n) {
      const double v = preds.at(n.name);
      pj[n.name] = v;
      csv += n.name + "," + std::string(to_string(level_of(tree, n))) + "," + fmt(v) + "," +
             (n.ground_truth_energy ? fmt(*n.ground_truth_energy) : "") + "\n";
    });
    j["predictions"] = std::move(pj);
    write_file(ctx.out_dir / "predictions" / (stem + ".json"), dump(j));
    write_file(ctx.out_dir / "predictions" / (stem + ".csv"), csv);
    write_file(ctx.out_dir / "predictions" / (stem + ".txt"), render_annotated(tree, preds));
    roots[stem] = preds.at(tree.root.name);
  }
  ctx.summary["regressor"] = predictor.kind();
  ctx.summary["trees"] = trees.size();
  ctx.summary["root_energy_j"] = std::move(roots);
}

struct EvalOpts {
  std::vector<std::string> inputs;
  std::string regressor = "end2end";
  bool loo = true;
  bool fallback_generic = false;
  bool serial = false;
  double pue = 1.0;
  HyperOpts hyper;
};

EvalConfig eval_config(const EvalOpts& o, RegressorKind kind) {
  EvalConfig c;
  c.kind = kind;
  c.hyper = resolve(o.hyper);
  c.fallback_generic = o.fallback_generic;
  c.baseline.pue = o.pue;
  c.parallel_folds = !o.serial;
  return c;
}

void cmd_eval(const EvalOpts& o, Ctx& ctx) {
  const RegressorKind kind = kind_arg(o.regressor);
  const auto paths = expand_inputs(o.inputs);
  const auto trees = load_trees(paths);
  EvalConfig config = eval_config(o, kind);
  if (kind == RegressorKind::kBaseline) config.traces = load_traces(paths);
  const EvalReport report = run_eval(trees, config);
  write_file(ctx.out_dir / "report.json", serialize_report(report));
  write_file(ctx.out_dir / "records.csv", records_csv(report));
  write_file(ctx.out_dir / "cdf.csv", cdf_csv(report));
  ctx.summary["regressor"] = std::string(to_string(kind));
  ctx.summary["protocol"] = "leave_one_model_out";
  ctx.summary["folds"] = report.per_model.size();
  ctx.summary["trees"] = trees.size();
  ctx.summary["hyper"] = hyper_json(config.hyper);
  ctx.summary["average_error_pct"] = levels_json(report.average);
  ctx.summary["pooled_error_pct"] = levels_json(report.pooled_nodes);
}

void write_ablation(const std::vector<AblationRow>& rows, const std::string& name, Ctx& ctx) {
  write_file(ctx.out_dir / (name + ".json"), serialize_ablation(rows));
  write_file(ctx.out_dir / (name + ".csv"), ablation_csv(rows));
  ordered_json j = ordered_json::object();
  for (const auto& r : rows) j[r.label] = levels_json(r.errors);
  ctx.summary["rows"] = std::move(j);
}

void cmd_ablate_features(const EvalOpts& o, Ctx& ctx) {
  const RegressorKind kind = kind_arg(o.regressor);
  if (kind == RegressorKind::kBaseline) {
    throw UsageError("the baseline does not use features; pick a tree regressor");
  }
  const auto trees = load_trees(expand_inputs(o.inputs));
  const EvalConfig config = eval_config(o, kind);
  ctx.summary["regressor"] = std::string(to_string(kind));
  write_ablation(ablate_features(trees, config), "ablation_features", ctx);
}

void cmd_ablate_regressors(const EvalOpts& o, bool no_baseline, Ctx& ctx) {
  const auto paths = expand_inputs(o.inputs);
  const auto trees = load_trees(paths);
  EvalConfig config = eval_config(o, RegressorKind::kEnd2End);
  const bool with_baseline = !no_baseline && all_traces_exist(paths);
  if (with_baseline) config.traces = load_traces(paths);
  ctx.summary["baseline"] = with_baseline;
  write_ablation(ablate_regressors(trees, config), "ablation_regressors", ctx);
}

struct BottleneckOpts {
  std::vector<std::string> inputs;
  std::string leaves;
  std::string model;
  bool renormalize = false;
};

void cmd_bottleneck(const BottleneckOpts& o, Ctx& ctx) {
  if (!o.model.empty() && o.leaves.empty()) throw UsageError("--model needs --leaves");
  const auto trees = load_trees(expand_inputs(o.inputs));
  std::optional<Predictor> predictor;
  if (!o.leaves.empty()) predictor = load_predictor(o.leaves, o.model, std::nullopt);

  std::map<std::string, std::vector<std::size_t>> by_model;
  for (std::size_t i = 0; i < trees.size(); ++i) by_model[trees[i].model_name].push_back(i);

  ordered_json models = ordered_json::object();
  std::string csv = "model_name,type_name,percent\n";
  for (const auto& [name, idx] : by_model) {
    std::vector<ModelTree> group;
    std::vector<PredictionMap> preds;
    for (std::size_t i : idx) {
      const ModelTree& t = trees[i];
      group.push_back(t);
      if (predictor) {
        preds.push_back((*predictor)(t));
        continue;
      }
      PredictionMap gt;
      for_each_node(t.root, [&](const Node& n) {
        if (!n.ground_truth_energy) {
          throw ValidationError("node '" + n.name + "' of " + t.model_name +
                                " has no ground truth; pass --leaves to use predictions");
        }
        gt[n.name] = *n.ground_truth_energy;
      });
      preds.push_back(std::move(gt));
    }
    auto shares = bottleneck_breakdown(group, preds);
    if (o.renormalize) shares = renormalize(shares);
    ordered_json rows = ordered_json::array();
    for (const auto& s : shares) {
      ordered_json r;
      r["type_name"] = s.type_name;
      r["percent"] = s.percent;
      rows.push_back(std::move(r));
      csv += name + "," + s.type_name + "," + fmt(s.percent) + "\n";
    }
    models[name] = std::move(rows);
  }
  const std::string source = predictor ? predictor->kind() : "ground_truth";
  ordered_json j;
  j["source"] = source;
  j["renormalized"] = o.renormalize;
  j["models"] = std::move(models);
  write_file(ctx.out_dir / "bottleneck.json", dump(j));
  write_file(ctx.out_dir / "bottleneck.csv", csv);
  ctx.summary["source"] = source;
  ctx.summary["renormalized"] = o.renormalize;
  ctx.summary["models"] = by_model.size();
  ctx.summary["trees"] = trees.size();
}

struct TradeoffOpts {
  std::string candidates;
  double budget = 0.0;
};

void cmd_tradeoff(const TradeoffOpts& o, Ctx& ctx) {
  const auto cands = parse_candidates_csv(read_file(o.candidates));
  const auto front = pareto_front(cands);
  std::string csv = "model_name,accuracy,predicted_energy_j\n";
  ordered_json fj = ordered_json::array();
  for (const auto& c : front) {
    fj.push_back(candidate_json(c));
    csv += c.model_name + "," + fmt(c.accuracy) + "," + fmt(c.predicted_energy) + "\n";
  }
  write_file(ctx.out_dir / "pareto.csv", csv);
  // Written before selection so an infeasible budget still leaves the front.
  const TradeoffCandidate best = tradeoff_select(cands, o.budget);
  ordered_json j;
  j["energy_budget_j"] = o.budget;
  j["selected"] = candidate_json(best);
  j["pareto_front"] = std::move(fj);
  write_file(ctx.out_dir / "tradeoff.json", dump(j));
  ctx.summary["candidates"] = cands.size();
  ctx.summary["selected"] = best.model_name;
  ctx.summary["accuracy"] = best.accuracy;
  ctx.summary["predicted_energy_j"] = best.predicted_energy;
  ctx.summary["pareto_size"] = front.size();
}

struct CostOpts {
  double energy_per_query = 0.0;
  double queries = 0.0;
  double usd_per_kwh = 0.1319;
};

void cmd_cost(const CostOpts& o, Ctx& ctx) {
  const QueryCost c = cost_of_queries(o.energy_per_query, o.queries, o.usd_per_kwh);
  ordered_json j;
  j["energy_per_query_j"] = o.energy_per_query;
  j["queries"] = o.queries;
  j["usd_per_kwh"] = o.usd_per_kwh;
  j["kwh"] = c.kwh;
  j["usd"] = c.usd;
  write_file(ctx.out_dir / "cost.json", dump(j));
  write_file(ctx.out_dir / "cost.csv",
             "energy_per_query_j,queries,usd_per_kwh,kwh,usd\n" + fmt(o.energy_per_query) + "," +
                 fmt(o.queries) + "," + fmt(o.usd_per_kwh) + "," + fmt(c.kwh) + "," + fmt(c.usd) +
                 "\n");
  ctx.summary["kwh"] = c.kwh;
  ctx.summary["usd"] = c.usd;
}

struct PowerOpts {
  std::string log;
  double interval = kDefaultSampleInterval;
};

void cmd_integrate_power(const PowerOpts& o, Ctx& ctx) {
  const auto samples = parse_power_csv(read_file(o.log));
  const double joules = integrate_power(samples, o.interval);
  ordered_json j;
  j["samples"] = samples.size();
  j["interval_s"] = o.interval;
  j["energy_j"] = joules;
  write_file(ctx.out_dir / "power.json", dump(j));
  write_file(ctx.out_dir / "power.csv", "samples,interval_s,energy_j\n" +
                                            std::to_string(samples.size()) + "," +
                                            fmt(o.interval) + "," + fmt(joules) + "\n");
  ctx.summary["samples"] = samples.size();
  ctx.summary["energy_j"] = joules;
}

// Returns the number of invalid files.
std::size_t cmd_validate(const std::vector<std::string>& inputs, Ctx& ctx) {
  const auto paths = expand_inputs(inputs);
  ordered_json files = ordered_json::array();
  std::string csv = "file,node,message\n";
  std::size_t invalid = 0;
  for (const auto& p : paths) {
    ValidationReport report;
    try {
      report = validate(parse_tree(read_file(p)));
    } catch (const ParseError& e) {
      report.push_back({"", e.what()});
    }
    ordered_json f;
    f["file"] = p.generic_string();
    f["valid"] = report.empty();
    ordered_json vs = ordered_json::array();
    for (const auto& v : report) {
      ordered_json vj;
      vj["node"] = v.node;
      vj["message"] = v.message;
      vs.push_back(std::move(vj));
      csv += p.generic_string() + "," + v.node + ",\"" + v.message + "\"\n";
    }
    f["violations"] = std::move(vs);
    files.push_back(std::move(f));
    if (!report.empty()) ++invalid;
  }
  write_file(ctx.out_dir / "validation.json", dump(files));
  write_file(ctx.out_dir / "validation.csv", csv);
  ctx.summary["files"] = paths.size();
  ctx.summary["invalid"] = invalid;
  return invalid;
}

void emit_error(std::ostream& out, std::ostream& err, const std::string& command, int code,
                const std::string& message) {
  err << "enertree " << (command.empty() ? "" : command + ": ") << message << "\n";
  ordered_json s;
  s["command"] = command;
  s["status"] = "error";
  s["exit_code"] = code;
  s["message"] = message;
  out << s.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interpretable, tree-structured energy prediction for NLP models", "enertree"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string output;
  app.add_option("-o,--output", output,
                 std::string("Output directory (default $") + kOutputEnv + " or " +
                     kDefaultOutput + ")");

  SynthOpts synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  s_synth->add_option("--scenario", synth.scenario, "Scenario file")->check(CLI::ExistingFile);
  s_synth->add_option("--layers", synth.layers, "Override the layer count of every model");
  s_synth->add_option("--seed", synth.seed, "Override the seed");
  s_synth->add_option("--bias-min", synth.bias_min, "Lower end of the module bias range");
  s_synth->add_option("--bias-max", synth.bias_max, "Upper end of the module bias range");

  TrainOpts train;
  auto* s_train = app.add_subcommand("train", "Train leaf and tree regressors");
  s_train->add_option("inputs", train.inputs, "Tree files or directories")->required();
  s_train->add_option("--regressor", train.regressor,
                      "end2end, stepwise, predicted_sum or unstructured");
  s_train->add_flag("--fallback-generic", train.fallback_generic,
                    "Fit a pooled leaf regressor for unseen primitives");
  add_hyper(s_train, train.hyper);

  PredictOpts predict;
  auto* s_predict = app.add_subcommand("predict", "Annotate trees with predicted energy");
  s_predict->add_option("inputs", predict.inputs, "Tree files or directories")->required();
  s_predict->add_option("--leaves", predict.leaves, "Leaf regressor file")
      ->required()
      ->check(CLI::ExistingFile);
  s_predict->add_option("--model", predict.model, "Tree model file (default: plain sum)")
      ->check(CLI::ExistingFile);
  s_predict->add_option("--floor", predict.floor, "Clamp leaf predictions from below");

  EvalOpts eval;
  auto* s_eval = app.add_subcommand("eval", "Leave-one-model-out evaluation");
  s_eval->add_option("inputs", eval.inputs, "Tree files or directories")->required();
  s_eval->add_option("--regressor", eval.regressor,
                     "end2end, stepwise, predicted_sum, unstructured or baseline");
  s_eval->add_flag("--loo", eval.loo, "Leave-one-model-out protocol (the only one offered)");
  s_eval->add_flag("--fallback-generic", eval.fallback_generic,
                   "Fit a pooled leaf regressor for unseen primitives");
  s_eval->add_flag("--serial", eval.serial, "Train folds one after another");
  s_eval->add_option("--pue", eval.pue, "Power usage effectiveness for the baseline");
  add_hyper(s_eval, eval.hyper);

  EvalOpts abl_f;
  auto* s_abl_f = app.add_subcommand("ablate-features", "Evaluate each feature subset");
  s_abl_f->add_option("inputs", abl_f.inputs, "Tree files or directories")->required();
  s_abl_f->add_option("--regressor", abl_f.regressor, "Tree regressor to ablate");
  s_abl_f->add_flag("--fallback-generic", abl_f.fallback_generic,
                    "Fit a pooled leaf regressor for unseen primitives");
  s_abl_f->add_flag("--serial", abl_f.serial, "Train folds one after another");
  add_hyper(s_abl_f, abl_f.hyper);

  EvalOpts abl_r;
  bool no_baseline = false;
  auto* s_abl_r = app.add_subcommand("ablate-regressors", "Evaluate every regressor kind");
  s_abl_r->add_option("inputs", abl_r.inputs, "Tree files or directories")->required();
  s_abl_r->add_flag("--fallback-generic", abl_r.fallback_generic,
                    "Fit a pooled leaf regressor for unseen primitives");
  s_abl_r->add_flag("--serial", abl_r.serial, "Train folds one after another");
  s_abl_r->add_flag("--no-baseline", no_baseline, "Skip the baseline even when traces exist");
  s_abl_r->add_option("--pue", abl_r.pue, "Power usage effectiveness for the baseline");
  add_hyper(s_abl_r, abl_r.hyper);

  BottleneckOpts bott;
  auto* s_bott = app.add_subcommand("bottleneck", "Module-level energy breakdown per model");
  s_bott->add_option("inputs", bott.inputs, "Tree files or directories")->required();
  s_bott->add_option("--leaves", bott.leaves, "Leaf regressor file (default: ground truth)")
      ->check(CLI::ExistingFile);
  s_bott->add_option("--model", bott.model, "Tree model file")->check(CLI::ExistingFile);
  s_bott->add_flag("--renormalize", bott.renormalize, "Scale shares to sum to 100");

  TradeoffOpts trade;
  auto* s_trade = app.add_subcommand("tradeoff", "Pick the most accurate model within budget");
  s_trade->add_option("--candidates", trade.candidates, "Candidates CSV")
      ->required()
      ->check(CLI::ExistingFile);
  s_trade->add_option("--budget", trade.budget, "Energy budget in joules")->required();

  CostOpts cost;
  auto* s_cost = app.add_subcommand("cost", "Energy and dollar cost of serving queries");
  s_cost->add_option("--energy-per-query", cost.energy_per_query, "Joules per query")
      ->required()
      ->check(CLI::NonNegativeNumber);
  s_cost->add_option("--queries", cost.queries, "Number of queries")
      ->required()
      ->check(CLI::NonNegativeNumber);
  s_cost->add_option("--usd-per-kwh", cost.usd_per_kwh, "Electricity price (default 0.1319)")
      ->check(CLI::NonNegativeNumber);

  PowerOpts power;
  auto* s_power = app.add_subcommand("integrate-power", "Joules from a power-meter log");
  s_power->add_option("log", power.log, "CSV timestamp_s,voltage_v,current_a")
      ->required()
      ->check(CLI::ExistingFile);
  s_power->add_option("--interval", power.interval, "Sampling interval in seconds (default 0.17)");

  std::vector<std::string> validate_inputs;
  auto* s_validate = app.add_subcommand("validate", "Check tree files against the schema");
  s_validate->add_option("inputs", validate_inputs, "Tree files or directories")->required();

  std::vector<const char*> argv{"enertree"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    err << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    emit_error(out, err, "", kUsage, e.what());
    return kUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  Ctx ctx;
  if (output.empty()) {
    const char* env = std::getenv(kOutputEnv);
    output = (env != nullptr && *env != '\0') ? env : kDefaultOutput;
  }
  ctx.out_dir = output;
  ctx.summary["command"] = command;
  ctx.summary["status"] = "ok";

  int code = kOk;
  try {
    if (chosen == s_synth) {
      cmd_synth(synth, ctx);
    } else if (chosen == s_train) {
      cmd_train(train, ctx);
    } else if (chosen == s_predict) {
      cmd_predict(predict, ctx);
    } else if (chosen == s_eval) {
      cmd_eval(eval, ctx);
    } else if (chosen == s_abl_f) {
      cmd_ablate_features(abl_f, ctx);
    } else if (chosen == s_abl_r) {
      cmd_ablate_regressors(abl_r, no_baseline, ctx);
    } else if (chosen == s_bott) {
      cmd_bottleneck(bott, ctx);
    } else if (chosen == s_trade) {
      cmd_tradeoff(trade, ctx);
    } else if (chosen == s_cost) {
      cmd_cost(cost, ctx);
    } else if (chosen == s_power) {
      cmd_integrate_power(power, ctx);
    } else if (chosen == s_validate) {
      if (cmd_validate(validate_inputs, ctx) > 0) {
        ctx.summary["status"] = "invalid";
        code = kValidation;
      }
    }
  } catch (const UsageError& e) {
    emit_error(out, err, command, kUsage, e.what());
    return kUsage;
  } catch (const TrainingError& e) {
    emit_error(out, err, command, kTraining, e.what());
    return kTraining;
  } catch (const Error& e) {
    emit_error(out, err, command, kValidation, e.what());
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    emit_error(out, err, command, kUsage, e.what());
    return kUsage;
  }
  ctx.summary["output"] = ctx.out_dir.generic_string();
  out << ctx.summary.dump() << "\n";
  return code;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace enertree::cli
