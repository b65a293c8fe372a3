#include "enertree/leaf_regressors.hpp"

#include <algorithm>

#include "enertree/error.hpp"
#include "serialization.hpp"

namespace enertree {
namespace {

constexpr std::string_view kLeafFormat = "enertree.leaf_regressors/1";

}  // namespace

bool is_known_primitive(std::string_view primitive) {
  return std::find(kKnownPrimitives.begin(), kKnownPrimitives.end(), primitive) !=
         kKnownPrimitives.end();
}

PrimitiveRegressorSet train_leaf_regressors(std::span<const ModelTree> training_trees,
                                            const LeafTrainOptions& options) {
  struct Samples {
    std::vector<FeatureVector> features;
    std::vector<double> targets;
  };
  std::map<std::string, Samples> by_primitive;
  Samples pooled;
  for (const ModelTree& tree : training_trees) {
    for (const Node* leaf : nodes_at_level(tree, Level::kMl)) {
      if (!leaf->ground_truth_energy) {
        throw ValidationError("leaf '" + leaf->name + "' of " + tree.model_name +
                              " has no ground-truth energy");
      }
      auto& s = by_primitive[*leaf->primitive];
      s.features.push_back(leaf->features);
      s.targets.push_back(*leaf->ground_truth_energy);
      if (options.fallback_generic) {
        pooled.features.push_back(leaf->features);
        pooled.targets.push_back(*leaf->ground_truth_energy);
      }
    }
  }
  if (by_primitive.empty()) throw ValidationError("no training leaves");

  PrimitiveRegressorSet regs;
  regs.subset = options.subset;
  for (const auto& [primitive, s] : by_primitive) {
    regs.primitives.emplace(primitive, fit_least_squares(s.features, s.targets, options.subset));
  }
  if (options.fallback_generic) {
    regs.generic = fit_least_squares(pooled.features, pooled.targets, options.subset);
  }
  return regs;
}

double predict_leaf(const PrimitiveRegressorSet& regs, const Node& node,
                    const LeafPredictOptions& options) {
  if (node.kind != NodeKind::kMl || !node.primitive) {
    throw ValidationError("predict_leaf: node '" + node.name + "' is not an ml leaf");
  }
  const LinearRegressor* reg = nullptr;
  if (auto it = regs.primitives.find(*node.primitive); it != regs.primitives.end()) {
    reg = &it->second;
  } else if (regs.generic) {
    reg = &*regs.generic;
  } else {
    throw UnknownPrimitiveError(*node.primitive);
  }
  double y = reg->predict(node.features);
  if (options.floor) y = std::max(y, *options.floor);
  return y;
}

PredictionMap predict_leaves(const PrimitiveRegressorSet& regs, const ModelTree& tree,
                             const LeafPredictOptions& options) {
  PredictionMap out;
  for (const Node* leaf : nodes_at_level(tree, Level::kMl)) {
    out.emplace(leaf->name, predict_leaf(regs, *leaf, options));
  }
  return out;
}

std::string serialize_leaf_regressors(const PrimitiveRegressorSet& regs) {
  detail::ordered_json j;
  j["format"] = kLeafFormat;
  j["subset"] = std::string(to_string(regs.subset));
  detail::ordered_json names = detail::ordered_json::array();
  for (Feature f : features_of(regs.subset)) names.push_back(std::string(name_of(f)));
  j["features"] = std::move(names);
  detail::ordered_json prims = detail::ordered_json::object();
  for (const auto& [name, reg] : regs.primitives) prims[name] = detail::linear_to_json(reg);
  j["primitives"] = std::move(prims);
  if (regs.generic) j["generic"] = detail::linear_to_json(*regs.generic);
  return detail::dump(j);
}

PrimitiveRegressorSet parse_leaf_regressors(std::string_view document) {
  const auto j = detail::parse_json(document, "leaf regressor file");
  const auto format = detail::as_string(detail::require(j, "format", "leaf regressors"), "format");
  if (format != kLeafFormat) throw ParseError("unsupported leaf regressor format '" + format + "'");
  PrimitiveRegressorSet regs;
  regs.subset = parse_subset(detail::as_string(detail::require(j, "subset", "leaf regressors"),
                                               "subset"));
  const auto& prims = detail::require(j, "primitives", "leaf regressors");
  if (!prims.is_object()) throw ParseError("leaf regressors: primitives must be an object");
  for (const auto& [name, entry] : prims.items()) {
    auto reg = detail::linear_from_json(entry);
    if (reg.normalizer.subset() != regs.subset) {
      throw ParseError("leaf regressor '" + name + "' was fitted on a different feature subset");
    }
    regs.primitives.emplace(name, std::move(reg));
  }
  if (auto it = j.find("generic"); it != j.end() && !it->is_null()) {
    regs.generic = detail::linear_from_json(*it);
  }
  return regs;
}

}  // namespace enertree
