#include "enertree/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <set>

#include "csv.hpp"
#include "enertree/error.hpp"
#include "json_util.hpp"

namespace enertree {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require_labels(std::span<const ModelTree> dataset, RegressorKind kind) {
  for (const ModelTree& tree : dataset) {
    if (kind == RegressorKind::kBaseline) {
      if (!tree.root.ground_truth_energy || !(*tree.root.ground_truth_energy > 0.0)) {
        throw ValidationError("root of " + tree.model_name + " lacks positive ground truth");
      }
      continue;
    }
    for_each_node(tree.root, [&](const Node& n) {
      if (!n.ground_truth_energy || !(*n.ground_truth_energy > 0.0)) {
        throw ValidationError("node '" + n.name + "' of " + tree.model_name +
                              " lacks positive ground-truth energy");
      }
    });
  }
}

void append_records(const ModelTree& tree, const PredictionMap& preds, bool model_level_only,
                    std::vector<NodeRecord>& out) {
  auto add = [&](const Node& n, Level level) {
    auto it = preds.find(n.name);
    if (it == preds.end()) throw ValidationError("no prediction for node '" + n.name + "'");
    NodeRecord r;
    r.model_name = tree.model_name;
    r.batch_size = tree.input_size.batch_size;
    r.seq_len = tree.input_size.seq_len;
    r.node = n.name;
    r.level = level;
    r.predicted = it->second;
    r.ground_truth = *n.ground_truth_energy;
    r.error_pct = error_pct(r.predicted, r.ground_truth);
    out.push_back(std::move(r));
  };
  if (model_level_only) {
    add(tree.root, Level::kModel);
    return;
  }
  auto rec = [&](auto&& self, const Node& n, bool is_root) -> void {
    add(n, is_root ? Level::kModel : (n.is_leaf() ? Level::kMl : Level::kModule));
    for (const Node& c : n.children) self(self, c, false);
  };
  rec(rec, tree.root, true);
}

std::vector<NodeRecord> run_fold(std::span<const ModelTree> dataset, const Fold& fold,
                                 const EvalConfig& config, std::uint64_t fold_seed) {
  std::vector<NodeRecord> records;
  if (config.kind == RegressorKind::kBaseline) {
    for (std::size_t idx : fold.test) {
      const double joules = utilization_energy(config.traces[idx], config.baseline);
      append_records(dataset[idx], {{dataset[idx].root.name, joules}}, true, records);
    }
    return records;
  }

  std::vector<ModelTree> train;
  train.reserve(fold.train.size());
  for (std::size_t idx : fold.train) train.push_back(dataset[idx]);

  TrainHyper hyper = config.hyper;
  hyper.seed = fold_seed;
  const PrimitiveRegressorSet leaves =
      train_leaf_regressors(train, {hyper.subset, config.fallback_generic});

  const TreeModel model = train_tree_model(train, leaves, config.kind, hyper);
  for (std::size_t idx : fold.test) {
    const ModelTree& tree = dataset[idx];
    append_records(tree, predict_tree(model, tree, predict_leaves(leaves, tree)), false, records);
  }
  return records;
}

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

detail::ordered_json opt_json(const std::optional<double>& v) {
  return v ? detail::ordered_json(*v) : detail::ordered_json(nullptr);
}

detail::ordered_json levels_json(const LevelErrors& e) {
  detail::ordered_json j;
  for (Level l : kAllLevels) j[std::string(to_string(l))] = opt_json(e.at(l));
  return j;
}

std::string opt_csv(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

}  // namespace

std::optional<double> LevelErrors::at(Level level) const {
  switch (level) {
    case Level::kMl:
      return ml;
    case Level::kModule:
      return module;
    case Level::kModel:
      return model;
  }
  return std::nullopt;
}

std::optional<double>& LevelErrors::at(Level level) {
  switch (level) {
    case Level::kMl:
      return ml;
    case Level::kModule:
      return module;
    case Level::kModel:
      break;
  }
  return model;
}

double error_pct(double predicted, double ground_truth) {
  if (!(ground_truth > 0.0)) throw ValidationError("error_pct: ground truth must be positive");
  return 100.0 * std::abs(predicted - ground_truth) / ground_truth;
}

std::vector<Fold> loo_splits(std::span<const ModelTree> dataset) {
  std::set<std::string> names;
  for (const ModelTree& tree : dataset) names.insert(tree.model_name);
  if (names.size() < 2) {
    throw ValidationError("leave-one-model-out needs at least two distinct model names, got " +
                          std::to_string(names.size()));
  }
  std::vector<Fold> folds;
  for (const std::string& name : names) {
    Fold fold;
    fold.held_out_model = name;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      (dataset[i].model_name == name ? fold.test : fold.train).push_back(i);
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

EvalReport run_eval(std::span<const ModelTree> dataset, const EvalConfig& config) {
  require_labels(dataset, config.kind);
  if (config.kind == RegressorKind::kBaseline && config.traces.size() != dataset.size()) {
    throw ValidationError("baseline evaluation needs one resource trace per tree");
  }
  const std::vector<Fold> folds = loo_splits(dataset);

  std::vector<std::vector<NodeRecord>> per_fold(folds.size());
  if (config.parallel_folds) {
    std::vector<std::future<std::vector<NodeRecord>>> jobs;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      jobs.push_back(std::async(std::launch::async, run_fold, dataset, std::cref(folds[f]),
                                std::cref(config), splitmix64(config.hyper.seed + f)));
    }
    for (std::size_t f = 0; f < folds.size(); ++f) per_fold[f] = jobs[f].get();
  } else {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      per_fold[f] = run_fold(dataset, folds[f], config, splitmix64(config.hyper.seed + f));
    }
  }

  EvalReport report;
  report.kind = config.kind;
  report.hyper = config.hyper;
  for (auto& recs : per_fold) {
    report.records.insert(report.records.end(), std::make_move_iterator(recs.begin()),
                          std::make_move_iterator(recs.end()));
  }

  std::map<std::string, std::array<std::vector<double>, 3>> by_model;
  std::array<std::vector<double>, 3> pooled;
  for (const NodeRecord& r : report.records) {
    const auto l = static_cast<std::size_t>(r.level);
    by_model[r.model_name][l].push_back(r.error_pct);
    pooled[l].push_back(r.error_pct);
  }
  std::array<std::vector<double>, 3> model_means;
  for (const auto& [name, levels] : by_model) {
    LevelErrors e;
    for (Level level : kAllLevels) {
      const auto l = static_cast<std::size_t>(level);
      e.at(level) = mean_of(levels[l]);
      if (e.at(level)) model_means[l].push_back(*e.at(level));
    }
    report.per_model.emplace_back(name, e);
  }
  for (Level level : kAllLevels) {
    const auto l = static_cast<std::size_t>(level);
    report.average.at(level) = mean_of(model_means[l]);
    report.pooled_nodes.at(level) = mean_of(pooled[l]);
    if (!pooled[l].empty()) report.cdf.emplace_back(level, error_cdf(pooled[l]));
  }
  return report;
}

std::vector<CdfPoint> error_cdf(std::span<const double> errors) {
  if (errors.empty()) throw ValidationError("error_cdf: empty error list");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<CdfPoint> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

std::vector<AblationRow> ablate_features(std::span<const ModelTree> dataset,
                                         const EvalConfig& config) {
  std::vector<AblationRow> rows;
  for (FeatureSubset subset : kAllSubsets) {
    EvalConfig c = config;
    c.hyper.subset = subset;
    rows.push_back({std::string(to_string(subset)), run_eval(dataset, c).average});
  }
  return rows;
}

std::vector<AblationRow> ablate_regressors(std::span<const ModelTree> dataset,
                                           const EvalConfig& config) {
  std::vector<RegressorKind> kinds = {RegressorKind::kEnd2End, RegressorKind::kStepWise,
                                      RegressorKind::kPredictedSum, RegressorKind::kUnstructured};
  if (!config.traces.empty()) kinds.push_back(RegressorKind::kBaseline);
  std::vector<AblationRow> rows;
  for (RegressorKind kind : kinds) {
    EvalConfig c = config;
    c.kind = kind;
    rows.push_back({std::string(to_string(kind)), run_eval(dataset, c).average});
  }
  return rows;
}

std::string serialize_report(const EvalReport& report) {
  detail::ordered_json j;
  j["regressor"] = std::string(to_string(report.kind));
  detail::ordered_json config;
  config["subset"] = std::string(to_string(report.hyper.subset));
  config["learning_rate"] = report.hyper.learning_rate;
  config["epochs"] = report.hyper.epochs;
  config["tau"] = report.hyper.tau;
  config["seed"] = report.hyper.seed;
  config["patience"] = report.hyper.patience;
  config["min_improvement"] = report.hyper.min_improvement;
  j["config"] = std::move(config);
  detail::ordered_json per_model = detail::ordered_json::object();
  for (const auto& [name, e] : report.per_model) per_model[name] = levels_json(e);
  j["per_model"] = std::move(per_model);
  j["average_over_models"] = levels_json(report.average);
  j["average_over_nodes"] = levels_json(report.pooled_nodes);
  j["node_records"] = report.records.size();
  return detail::dump(j);
}

std::string records_csv(const EvalReport& report) {
  std::string out = "model_name,batch_size,seq_len,node,level,predicted_j,ground_truth_j,error_pct\n";
  for (const NodeRecord& r : report.records) {
    out += r.model_name + ',' + std::to_string(r.batch_size) + ',' + std::to_string(r.seq_len) + ',' +
           r.node + ',' + std::string(to_string(r.level)) + ',' + csv::format_double(r.predicted) +
           ',' + csv::format_double(r.ground_truth) + ',' + csv::format_double(r.error_pct) + '\n';
  }
  return out;
}

std::string cdf_csv(const EvalReport& report) {
  std::string out = "level,error_pct,cumulative_fraction\n";
  for (const auto& [level, points] : report.cdf) {
    for (const CdfPoint& p : points) {
      out += std::string(to_string(level)) + ',' + csv::format_double(p.error) + ',' +
             csv::format_double(p.fraction) + '\n';
    }
  }
  return out;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::string out = "variant,ml,module,model\n";
  for (const AblationRow& r : rows) {
    out += r.label + ',' + opt_csv(r.errors.ml) + ',' + opt_csv(r.errors.module) + ',' +
           opt_csv(r.errors.model) + '\n';
  }
  return out;
}

std::string serialize_ablation(std::span<const AblationRow> rows) {
  detail::ordered_json j = detail::ordered_json::array();
  for (const AblationRow& r : rows) {
    detail::ordered_json row;
    row["variant"] = r.label;
    row["errors"] = levels_json(r.errors);
    j.push_back(std::move(row));
  }
  return detail::dump(j);
}

}  // namespace enertree
