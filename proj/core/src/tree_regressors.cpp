#include "enertree/tree_regressors.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "enertree/error.hpp"
#include "serialization.hpp"

namespace enertree {
namespace {

constexpr std::string_view kTreeModelFormat = "enertree.tree_model/1";

// Pre-order flattening of one tree with normalised features. Children always
// follow their parent, so a reverse sweep visits children first.
struct FlatTree {
  std::vector<const Node*> nodes;
  std::vector<int> parent;
  std::vector<int> child_begin;  // CSR offsets into `children`
  std::vector<int> children;
  std::vector<double> x;  // n * dim, row-major
  std::vector<double> leaf_pred;
  std::vector<double> truth;  // NaN when absent
  std::size_t dim = 0;

  std::size_t size() const { return nodes.size(); }
  bool is_leaf(std::size_t i) const { return child_begin[i] == child_begin[i + 1]; }
  const double* row(std::size_t i) const { return x.data() + i * dim; }
};

FlatTree flatten(const ModelTree& tree, const Normalizer& norm, const PredictionMap* leaf_preds) {
  FlatTree flat;
  flat.dim = norm.dimension();
  std::vector<std::vector<int>> kids;
  auto visit = [&](auto&& self, const Node& node, int parent) -> void {
    const int idx = static_cast<int>(flat.nodes.size());
    flat.nodes.push_back(&node);
    flat.parent.push_back(parent);
    kids.emplace_back();
    if (parent >= 0) kids[static_cast<std::size_t>(parent)].push_back(idx);
    for (const Node& c : node.children) self(self, c, idx);
  };
  visit(visit, tree.root, -1);

  const std::size_t n = flat.nodes.size();
  flat.child_begin.resize(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    flat.child_begin[i + 1] = flat.child_begin[i] + static_cast<int>(kids[i].size());
    flat.children.insert(flat.children.end(), kids[i].begin(), kids[i].end());
  }
  flat.x.resize(n * flat.dim);
  flat.leaf_pred.assign(n, 0.0);
  flat.truth.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = *flat.nodes[i];
    norm.apply_into(node.features, std::span<double>(flat.x.data() + i * flat.dim, flat.dim));
    if (node.ground_truth_energy) flat.truth[i] = *node.ground_truth_energy;
    if (leaf_preds && flat.is_leaf(i)) {
      auto it = leaf_preds->find(node.name);
      if (it == leaf_preds->end()) {
        throw ValidationError("no leaf prediction for '" + node.name + "'");
      }
      flat.leaf_pred[i] = it->second;
    }
  }
  return flat;
}

struct AlphaTerms {
  std::vector<double> alpha;
  std::vector<double> dalpha;  // d alpha / d z
};

AlphaTerms compute_alpha(const TreeRegressorParams& params, const FlatTree& flat) {
  AlphaTerms terms;
  terms.alpha.resize(flat.size(), 1.0);
  terms.dalpha.resize(flat.size(), 0.0);
  for (std::size_t i = 1; i < flat.size(); ++i) {
    const double* xi = flat.row(i);
    double z = params.bias;
    for (std::size_t k = 0; k < flat.dim; ++k) z += params.weights[k] * xi[k];
    const double t = std::tanh(z);
    terms.alpha[i] = 1.0 + t / params.tau;
    terms.dalpha[i] = (1.0 - t * t) / params.tau;
  }
  return terms;
}

std::vector<double> forward(const FlatTree& flat, const AlphaTerms& terms) {
  std::vector<double> p(flat.size(), 0.0);
  for (std::size_t r = flat.size(); r-- > 0;) {
    if (flat.is_leaf(r)) {
      p[r] = flat.leaf_pred[r];
      continue;
    }
    double sum = 0.0;
    for (int k = flat.child_begin[r]; k < flat.child_begin[r + 1]; ++k) {
      const auto c = static_cast<std::size_t>(flat.children[static_cast<std::size_t>(k)]);
      sum += terms.alpha[c] * p[c];
    }
    p[r] = sum;
  }
  return p;
}

double require_truth(const FlatTree& flat, std::size_t i) {
  const double g = flat.truth[i];
  if (!(g > 0.0) || !std::isfinite(g)) {
    throw ValidationError("node '" + flat.nodes[i]->name +
                          "' needs strictly positive ground-truth energy");
  }
  return g;
}

// Relative squared loss over non-leaf nodes and its gradient, reverse mode.
LossGradient end2end_loss_grad(const TreeRegressorParams& params, const FlatTree& flat) {
  const AlphaTerms terms = compute_alpha(params, flat);
  const std::vector<double> p = forward(flat, terms);
  LossGradient out;
  out.d_weights.assign(flat.dim, 0.0);

  std::vector<double> adj(flat.size(), 0.0);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    double a = 0.0;
    if (!flat.is_leaf(i)) {
      const double g = require_truth(flat, i);
      const double diff = p[i] - g;
      out.loss += diff * diff / (g * g);
      a = 2.0 * diff / (g * g);
    }
    const int par = flat.parent[i];
    if (par >= 0) {
      const double up = adj[static_cast<std::size_t>(par)];
      a += up * terms.alpha[i];
      const double coeff = up * p[i] * terms.dalpha[i];
      const double* xi = flat.row(i);
      for (std::size_t k = 0; k < flat.dim; ++k) out.d_weights[k] += coeff * xi[k];
      out.d_bias += coeff;
    }
    adj[i] = a;
  }
  return out;
}

LossGradient stepwise_loss_grad(const TreeRegressorParams& params, const FlatTree& flat) {
  const AlphaTerms terms = compute_alpha(params, flat);
  LossGradient out;
  out.d_weights.assign(flat.dim, 0.0);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (flat.is_leaf(i)) continue;
    const double g = require_truth(flat, i);
    double pred = 0.0;
    for (int k = flat.child_begin[i]; k < flat.child_begin[i + 1]; ++k) {
      const auto c = static_cast<std::size_t>(flat.children[static_cast<std::size_t>(k)]);
      pred += terms.alpha[c] * require_truth(flat, c);
    }
    const double diff = pred - g;
    out.loss += diff * diff / (g * g);
    const double r = 2.0 * diff / (g * g);
    for (int k = flat.child_begin[i]; k < flat.child_begin[i + 1]; ++k) {
      const auto c = static_cast<std::size_t>(flat.children[static_cast<std::size_t>(k)]);
      const double coeff = r * flat.truth[c] * terms.dalpha[c];
      const double* xc = flat.row(c);
      for (std::size_t d = 0; d < flat.dim; ++d) out.d_weights[d] += coeff * xc[d];
      out.d_bias += coeff;
    }
  }
  return out;
}

Normalizer fit_non_root(std::span<const ModelTree> trees, FeatureSubset subset) {
  std::vector<FeatureVector> samples;
  for (const ModelTree& tree : trees) {
    for (const Node& child : tree.root.children) {
      for_each_node(child, [&](const Node& n) { samples.push_back(n.features); });
    }
  }
  return Normalizer::fit(samples, subset);
}

void check_hyper(const TrainHyper& hyper) {
  if (!(hyper.tau > 0.0)) throw ValidationError("tau must be positive");
  if (!(hyper.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (hyper.epochs < 0) throw ValidationError("epochs must be non-negative");
}

// Full-batch Adam over theta = [W; b]. Keeps the lowest-loss iterate.
template <typename LossFn>
void adam_minimize(TreeRegressorParams& params, const TrainHyper& hyper, LossFn&& loss_fn,
                   TrainStats* stats) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const std::size_t dim = params.weights.size() + 1;
  std::vector<double> m(dim, 0.0);
  std::vector<double> v(dim, 0.0);
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(hyper.epochs) + 1);

  TreeRegressorParams best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  double beta1_t = 1.0;
  double beta2_t = 1.0;
  int epoch = 0;
  for (; epoch <= hyper.epochs; ++epoch) {
    LossGradient lg = loss_fn(params);
    if (!std::isfinite(lg.loss)) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "non-finite training loss at epoch %d", epoch);
      throw TrainingError(buf);
    }
    history.push_back(lg.loss);
    if (lg.loss < best_loss) {
      best_loss = lg.loss;
      best = params;
    }
    if (epoch == hyper.epochs) break;
    const auto e = static_cast<std::size_t>(epoch);
    if (hyper.patience > 0 && e >= static_cast<std::size_t>(hyper.patience) &&
        history[e - static_cast<std::size_t>(hyper.patience)] - lg.loss < hyper.min_improvement) {
      break;
    }

    beta1_t *= kBeta1;
    beta2_t *= kBeta2;
    for (std::size_t k = 0; k < dim; ++k) {
      const double g = k + 1 < dim ? lg.d_weights[k] : lg.d_bias;
      m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g;
      v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g * g;
      const double m_hat = m[k] / (1.0 - beta1_t);
      const double v_hat = v[k] / (1.0 - beta2_t);
      const double step = hyper.learning_rate * m_hat / (std::sqrt(v_hat) + kEps);
      if (k + 1 < dim) {
        params.weights[k] -= step;
      } else {
        params.bias -= step;
      }
    }
  }
  if (stats) {
    stats->epochs_run = epoch;
    stats->initial_loss = history.front();
    stats->final_loss = best_loss;
  }
  params = std::move(best);
}

LossGradient sum_over(const std::vector<FlatTree>& flats, const TreeRegressorParams& params,
                      LossGradient (*fn)(const TreeRegressorParams&, const FlatTree&)) {
  LossGradient total;
  total.d_weights.assign(params.weights.size(), 0.0);
  for (const FlatTree& flat : flats) {
    const LossGradient lg = fn(params, flat);
    total.loss += lg.loss;
    for (std::size_t k = 0; k < total.d_weights.size(); ++k) total.d_weights[k] += lg.d_weights[k];
    total.d_bias += lg.d_bias;
  }
  return total;
}

void check_params(const TreeRegressorParams& params) {
  if (!(params.tau > 0.0)) throw ValidationError("tau must be positive");
  if (params.weights.size() != params.normalizer.dimension()) {
    throw ValidationError("tree regressor weight count does not match its normalizer");
  }
}

detail::ordered_json hyper_to_json(const TrainHyper& h) {
  detail::ordered_json j;
  j["learning_rate"] = h.learning_rate;
  j["epochs"] = h.epochs;
  j["tau"] = h.tau;
  j["seed"] = h.seed;
  j["subset"] = std::string(to_string(h.subset));
  j["patience"] = h.patience;
  j["min_improvement"] = h.min_improvement;
  return j;
}

TrainHyper hyper_from_json(const detail::json& j) {
  TrainHyper h;
  h.learning_rate = detail::as_double(detail::require(j, "learning_rate", "hyper"), "learning_rate");
  h.epochs = static_cast<int>(detail::as_int(detail::require(j, "epochs", "hyper"), "epochs"));
  h.tau = detail::as_double(detail::require(j, "tau", "hyper"), "tau");
  const auto& seed = detail::require(j, "seed", "hyper");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ParseError("hyper.seed must be an integer");
  }
  h.seed = seed.get<std::uint64_t>();
  h.subset = parse_subset(detail::as_string(detail::require(j, "subset", "hyper"), "subset"));
  h.patience = static_cast<int>(detail::as_int(detail::require(j, "patience", "hyper"), "patience"));
  h.min_improvement =
      detail::as_double(detail::require(j, "min_improvement", "hyper"), "min_improvement");
  return h;
}

}  // namespace

std::string_view to_string(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::kEnd2End:
      return "end2end";
    case RegressorKind::kStepWise:
      return "stepwise";
    case RegressorKind::kPredictedSum:
      return "predicted_sum";
    case RegressorKind::kUnstructured:
      return "unstructured";
    case RegressorKind::kBaseline:
      return "baseline";
  }
  return "end2end";
}

RegressorKind parse_regressor_kind(std::string_view text) {
  if (text == "end2end") return RegressorKind::kEnd2End;
  if (text == "stepwise") return RegressorKind::kStepWise;
  if (text == "predicted_sum" || text == "predicted-sum") return RegressorKind::kPredictedSum;
  if (text == "unstructured") return RegressorKind::kUnstructured;
  if (text == "baseline") return RegressorKind::kBaseline;
  throw ValidationError("unknown regressor kind '" + std::string(text) + "'");
}

TreeRegressorParams zero_params(Normalizer normalizer, double tau, RegressorKind kind) {
  TreeRegressorParams p;
  p.kind = kind;
  p.weights.assign(normalizer.dimension(), 0.0);
  p.bias = 0.0;
  p.tau = tau;
  p.normalizer = std::move(normalizer);
  return p;
}

double alpha(const TreeRegressorParams& params, const Node& child) {
  check_params(params);
  const auto x = params.normalizer.apply(child.features);
  double z = params.bias;
  for (std::size_t k = 0; k < x.size(); ++k) z += params.weights[k] * x[k];
  return 1.0 + std::tanh(z) / params.tau;
}

PredictionMap predict_sum(const ModelTree& tree, const PredictionMap& leaf_preds) {
  PredictionMap out;
  auto rec = [&](auto&& self, const Node& node) -> double {
    double value = 0.0;
    if (node.is_leaf()) {
      auto it = leaf_preds.find(node.name);
      if (it == leaf_preds.end()) {
        throw ValidationError("no leaf prediction for '" + node.name + "'");
      }
      value = it->second;
    } else {
      for (const Node& c : node.children) value += self(self, c);
    }
    out.emplace(node.name, value);
    return value;
  };
  rec(rec, tree.root);
  return out;
}

PredictionMap end2end_predict(const TreeRegressorParams& params, const ModelTree& tree,
                              const PredictionMap& leaf_preds) {
  check_params(params);
  const FlatTree flat = flatten(tree, params.normalizer, &leaf_preds);
  const std::vector<double> p = forward(flat, compute_alpha(params, flat));
  PredictionMap out;
  for (std::size_t i = 0; i < flat.size(); ++i) out.emplace(flat.nodes[i]->name, p[i]);
  return out;
}

PredictionMap stepwise_predict(const TreeRegressorParams& params, const ModelTree& tree,
                               const PredictionMap& leaf_preds) {
  return end2end_predict(params, tree, leaf_preds);
}

double tree_loss(const TreeRegressorParams& params, const ModelTree& tree,
                 const PredictionMap& leaf_preds) {
  return tree_loss_gradient(params, tree, leaf_preds).loss;
}

LossGradient tree_loss_gradient(const TreeRegressorParams& params, const ModelTree& tree,
                                const PredictionMap& leaf_preds) {
  check_params(params);
  return end2end_loss_grad(params, flatten(tree, params.normalizer, &leaf_preds));
}

LossGradient stepwise_loss_gradient(const TreeRegressorParams& params, const ModelTree& tree) {
  check_params(params);
  return stepwise_loss_grad(params, flatten(tree, params.normalizer, nullptr));
}

TreeRegressorParams train_end2end(std::span<const ModelTree> training_trees,
                                  const PrimitiveRegressorSet& leaf_regs, const TrainHyper& hyper,
                                  TrainStats* stats) {
  check_hyper(hyper);
  if (training_trees.empty()) throw ValidationError("train_end2end: no training trees");
  TreeRegressorParams params =
      zero_params(fit_non_root(training_trees, hyper.subset), hyper.tau, RegressorKind::kEnd2End);
  std::vector<FlatTree> flats;
  flats.reserve(training_trees.size());
  for (const ModelTree& tree : training_trees) {
    const PredictionMap leaves = predict_leaves(leaf_regs, tree);
    flats.push_back(flatten(tree, params.normalizer, &leaves));
  }
  adam_minimize(params, hyper,
                [&](const TreeRegressorParams& p) { return sum_over(flats, p, &end2end_loss_grad); },
                stats);
  return params;
}

TreeRegressorParams train_stepwise(std::span<const ModelTree> training_trees,
                                   const TrainHyper& hyper, TrainStats* stats) {
  check_hyper(hyper);
  if (training_trees.empty()) throw ValidationError("train_stepwise: no training trees");
  TreeRegressorParams params =
      zero_params(fit_non_root(training_trees, hyper.subset), hyper.tau, RegressorKind::kStepWise);
  std::vector<FlatTree> flats;
  flats.reserve(training_trees.size());
  for (const ModelTree& tree : training_trees) {
    flats.push_back(flatten(tree, params.normalizer, nullptr));
  }
  adam_minimize(params, hyper,
                [&](const TreeRegressorParams& p) { return sum_over(flats, p, &stepwise_loss_grad); },
                stats);
  return params;
}

UnstructuredParams train_unstructured(std::span<const ModelTree> training_trees,
                                      const TrainHyper& hyper) {
  std::vector<FeatureVector> features;
  std::vector<double> targets;
  for (const ModelTree& tree : training_trees) {
    for_each_node(tree.root, [&](const Node& n) {
      if (n.is_leaf()) return;
      if (!n.ground_truth_energy) {
        throw ValidationError("node '" + n.name + "' of " + tree.model_name +
                              " has no ground-truth energy");
      }
      features.push_back(n.features);
      targets.push_back(*n.ground_truth_energy);
    });
  }
  if (features.empty()) throw ValidationError("train_unstructured: no non-leaf training nodes");
  return UnstructuredParams{fit_least_squares(features, targets, hyper.subset)};
}

double unstructured_predict(const UnstructuredParams& params, const Node& node) {
  return params.regressor.predict(node.features);
}

PredictionMap unstructured_predict_tree(const UnstructuredParams& params, const ModelTree& tree,
                                        const PredictionMap& leaf_preds) {
  PredictionMap out;
  for_each_node(tree.root, [&](const Node& n) {
    if (n.is_leaf()) {
      auto it = leaf_preds.find(n.name);
      if (it == leaf_preds.end()) throw ValidationError("no leaf prediction for '" + n.name + "'");
      out.emplace(n.name, it->second);
    } else {
      out.emplace(n.name, unstructured_predict(params, n));
    }
  });
  return out;
}

TreeModel train_tree_model(std::span<const ModelTree> training_trees,
                           const PrimitiveRegressorSet& leaf_regs, RegressorKind kind,
                           const TrainHyper& hyper, TrainStats* stats) {
  TreeModel model;
  model.kind = kind;
  model.hyper = hyper;
  switch (kind) {
    case RegressorKind::kEnd2End:
      model.weighted = train_end2end(training_trees, leaf_regs, hyper, stats);
      break;
    case RegressorKind::kStepWise:
      model.weighted = train_stepwise(training_trees, hyper, stats);
      break;
    case RegressorKind::kUnstructured:
      model.unstructured = train_unstructured(training_trees, hyper);
      break;
    case RegressorKind::kPredictedSum:
      break;
    case RegressorKind::kBaseline:
      throw ValidationError("baseline is not a tree model; evaluate it with resource traces");
  }
  return model;
}

PredictionMap predict_tree(const TreeModel& model, const ModelTree& tree,
                           const PredictionMap& leaf_preds) {
  switch (model.kind) {
    case RegressorKind::kEnd2End:
      return end2end_predict(model.weighted, tree, leaf_preds);
    case RegressorKind::kStepWise:
      return stepwise_predict(model.weighted, tree, leaf_preds);
    case RegressorKind::kPredictedSum:
      return predict_sum(tree, leaf_preds);
    case RegressorKind::kUnstructured:
      return unstructured_predict_tree(model.unstructured, tree, leaf_preds);
    case RegressorKind::kBaseline:
      break;
  }
  throw ValidationError("the baseline estimate needs a resource trace, not a tree model");
}

std::string serialize_tree_model(const TreeModel& model) {
  detail::ordered_json j;
  j["format"] = kTreeModelFormat;
  j["kind"] = std::string(to_string(model.kind));
  j["hyper"] = hyper_to_json(model.hyper);
  j["leaf_regressors_hash"] = model.leaf_regressors_hash;
  switch (model.kind) {
    case RegressorKind::kEnd2End:
    case RegressorKind::kStepWise: {
      detail::ordered_json p;
      p["weights"] = model.weighted.weights;
      p["bias"] = model.weighted.bias;
      p["tau"] = model.weighted.tau;
      p["normalizer"] = detail::normalizer_to_json(model.weighted.normalizer);
      j["params"] = std::move(p);
      break;
    }
    case RegressorKind::kUnstructured:
      j["params"] = detail::linear_to_json(model.unstructured.regressor);
      break;
    case RegressorKind::kPredictedSum:
      break;
    case RegressorKind::kBaseline:
      throw ValidationError("baseline has no serialisable tree model");
  }
  return detail::dump(j);
}

TreeModel parse_tree_model(std::string_view document) {
  const auto j = detail::parse_json(document, "tree model file");
  const auto format = detail::as_string(detail::require(j, "format", "tree model"), "format");
  if (format != kTreeModelFormat) throw ParseError("unsupported tree model format '" + format + "'");
  TreeModel model;
  try {
    model.kind = parse_regressor_kind(detail::as_string(detail::require(j, "kind", "tree model"), "kind"));
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  model.hyper = hyper_from_json(detail::require(j, "hyper", "tree model"));
  model.leaf_regressors_hash = detail::as_string(
      detail::require(j, "leaf_regressors_hash", "tree model"), "leaf_regressors_hash");
  switch (model.kind) {
    case RegressorKind::kEnd2End:
    case RegressorKind::kStepWise: {
      const auto& p = detail::require(j, "params", "tree model");
      model.weighted.kind = model.kind;
      model.weighted.weights = detail::as_double_array(detail::require(p, "weights", "params"), "weights");
      model.weighted.bias = detail::as_double(detail::require(p, "bias", "params"), "bias");
      model.weighted.tau = detail::as_double(detail::require(p, "tau", "params"), "tau");
      model.weighted.normalizer = detail::normalizer_from_json(detail::require(p, "normalizer", "params"));
      if (!(model.weighted.tau > 0.0) ||
          model.weighted.weights.size() != model.weighted.normalizer.dimension()) {
        throw ParseError("tree model parameters are inconsistent");
      }
      break;
    }
    case RegressorKind::kUnstructured:
      model.unstructured.regressor = detail::linear_from_json(detail::require(j, "params", "tree model"));
      break;
    case RegressorKind::kPredictedSum:
      break;
    case RegressorKind::kBaseline:
      throw ParseError("baseline is not a tree model kind");
  }
  return model;
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace enertree
