#include "enertree/model_tree.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "enertree/error.hpp"
#include "json_util.hpp"

namespace enertree {
namespace {

using detail::json;
using detail::ordered_json;

struct ParseState {
  std::unordered_set<std::string> names;
};

FeatureVector parse_features(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": features must be an object");
  FeatureVector fv;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto key = kFeatureNames[i];
    fv.values[i] = detail::as_double(detail::require(obj, key, where + ".features"),
                                     where + ".features." + std::string(key));
  }
  return fv;
}

Node parse_node(const json& obj, ParseState& state, bool is_root, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + " is not an object");
  Node node;
  node.name = detail::as_string(detail::require(obj, "name", path), path + ".name");
  const std::string where = "node '" + node.name + "'";
  if (node.name.empty()) throw ParseError(path + ": empty node name");
  if (!state.names.insert(node.name).second) {
    throw ParseError("duplicate node name '" + node.name + "'");
  }

  const auto kind_text = detail::as_string(detail::require(obj, "kind", where), where + ".kind");
  const auto kind = node_kind_from_string(kind_text);
  if (!kind) throw ParseError(where + ": unknown kind '" + kind_text + "'");
  node.kind = *kind;
  if (is_root && node.kind != NodeKind::kModel) {
    throw ParseError("root node '" + node.name + "' must have kind \"model\"");
  }
  if (!is_root && node.kind == NodeKind::kModel) {
    throw ParseError(where + ": kind \"model\" is only allowed at the root");
  }

  if (auto it = obj.find("primitive"); it != obj.end() && !it->is_null()) {
    node.primitive = detail::as_string(*it, where + ".primitive");
  }
  if (auto it = obj.find("type_name"); it != obj.end() && !it->is_null()) {
    node.type_name = detail::as_string(*it, where + ".type_name");
  } else {
    node.type_name = strip_instance_index(node.name);
  }
  node.features = parse_features(detail::require(obj, "features", where), where);
  if (auto it = obj.find("ground_truth_energy"); it != obj.end() && !it->is_null()) {
    node.ground_truth_energy = detail::as_double(*it, where + ".ground_truth_energy");
  }

  if (auto it = obj.find("children"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError(where + ": children must be an array");
    node.children.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i) {
      node.children.push_back(
          parse_node((*it)[i], state, false, where + ".children[" + std::to_string(i) + "]"));
    }
  }

  if (node.kind == NodeKind::kMl) {
    if (!node.primitive) throw ParseError("leaf " + where + " has no primitive");
    if (!node.children.empty()) throw ParseError(where + ": kind \"ml\" cannot have children");
  } else {
    if (node.primitive) throw ParseError(where + ": only ml nodes carry a primitive");
    if (node.children.empty()) {
      throw ParseError("internal " + where + " has no children");
    }
  }
  return node;
}

ordered_json node_to_json(const Node& node) {
  ordered_json j;
  j["name"] = node.name;
  j["kind"] = std::string(to_string(node.kind));
  if (node.primitive) j["primitive"] = *node.primitive;
  if (node.type_name != strip_instance_index(node.name)) j["type_name"] = node.type_name;
  ordered_json features = ordered_json::object();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    features[std::string(kFeatureNames[i])] = node.features.values[i];
  }
  j["features"] = std::move(features);
  if (node.ground_truth_energy) j["ground_truth_energy"] = *node.ground_truth_energy;
  if (!node.children.empty()) {
    ordered_json children = ordered_json::array();
    for (const Node& c : node.children) children.push_back(node_to_json(c));
    j["children"] = std::move(children);
  }
  return j;
}

std::size_t depth_of(const Node& node) {
  std::size_t d = 0;
  for (const Node& c : node.children) d = std::max(d, depth_of(c));
  return d + 1;
}

void collect(const Node& node, bool is_root, Level level, std::vector<const Node*>& out) {
  const bool match = (level == Level::kModel && is_root) ||
                     (level == Level::kMl && node.is_leaf() && !is_root) ||
                     (level == Level::kModule && !node.is_leaf() && !is_root);
  if (match) out.push_back(&node);
  for (const Node& c : node.children) collect(c, false, level, out);
}

void validate_node(const ModelTree& tree, const Node& node, bool is_root,
                   std::set<std::string>& seen, ValidationReport& report) {
  auto add = [&](std::string message) { report.push_back({node.name, std::move(message)}); };

  if (node.name.empty()) add("empty node name");
  if (!seen.insert(node.name).second) add("duplicate node name");

  if (is_root && node.kind != NodeKind::kModel) add("root must have kind model");
  if (!is_root && node.kind == NodeKind::kModel) add("kind model below the root");

  const bool is_ml = node.kind == NodeKind::kMl;
  if (is_ml && !node.is_leaf()) add("ml node has children");
  if (!is_ml && node.is_leaf()) add(std::string(to_string(node.kind)) + " node has no children");
  if (is_ml && !node.primitive) add("ml node has no primitive");
  if (!is_ml && node.primitive) add("non-ml node carries a primitive");

  if (node.ground_truth_energy) {
    const double g = *node.ground_truth_energy;
    if (!std::isfinite(g) || g <= 0.0) add("ground_truth_energy must be strictly positive");
  }
  if (auto problem = check_feature_domain(node.features)) add("feature " + *problem);

  const double b = node.features[Feature::kBatchSize];
  const double s = node.features[Feature::kSeqLen];
  if (std::isfinite(b) && b != static_cast<double>(tree.input_size.batch_size)) {
    add("batch_size feature does not match the tree input size");
  }
  if (std::isfinite(s) && s != static_cast<double>(tree.input_size.seq_len)) {
    add("seq_len feature does not match the tree input size");
  }
  for (const Node& c : node.children) validate_node(tree, c, false, seen, report);
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

void render_node(const Node& node, std::size_t indent, double root_energy,
                 const PredictionMap& predictions, std::ostringstream& out) {
  auto it = predictions.find(node.name);
  if (it == predictions.end()) {
    throw ValidationError("no prediction for node '" + node.name + "'");
  }
  out << std::string(indent * 2, ' ') << node.name << "  ";
  if (indent == 0) {
    out << format_fixed(it->second, 4) << " J";
  } else if (root_energy != 0.0) {
    out << format_fixed(100.0 * it->second / root_energy, 1) << '%';
  } else {
    out << "n/a";
  }
  out << '\n';
  for (const Node& c : node.children) render_node(c, indent + 1, root_energy, predictions, out);
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kModel:
      return "model";
    case NodeKind::kModule:
      return "module";
    case NodeKind::kMl:
      return "ml";
  }
  return "ml";
}

std::optional<NodeKind> node_kind_from_string(std::string_view text) {
  if (text == "model") return NodeKind::kModel;
  if (text == "module") return NodeKind::kModule;
  if (text == "ml") return NodeKind::kMl;
  return std::nullopt;
}

std::string_view to_string(Level level) {
  switch (level) {
    case Level::kMl:
      return "ml";
    case Level::kModule:
      return "module";
    case Level::kModel:
      return "model";
  }
  return "ml";
}

std::string strip_instance_index(std::string_view name) {
  const auto colon = name.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == name.size()) return std::string(name);
  const auto suffix = name.substr(colon + 1);
  const bool numeric = std::all_of(suffix.begin(), suffix.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  return numeric ? std::string(name.substr(0, colon)) : std::string(name);
}

ModelTree parse_tree(std::string_view document) {
  const json doc = detail::parse_json(document, "tree document");
  if (!doc.is_object()) throw ParseError("tree document must be a JSON object");
  ModelTree tree;
  tree.model_name = detail::as_string(detail::require(doc, "model_name", "tree"), "model_name");
  tree.input_size.batch_size =
      detail::as_int(detail::require(doc, "batch_size", "tree"), "batch_size");
  tree.input_size.seq_len = detail::as_int(detail::require(doc, "seq_len", "tree"), "seq_len");
  if (tree.input_size.batch_size <= 0) throw ParseError("batch_size must be positive");
  if (tree.input_size.seq_len <= 0) throw ParseError("seq_len must be positive");
  ParseState state;
  tree.root = parse_node(detail::require(doc, "root", "tree"), state, true, "root");
  return tree;
}

ModelTree load_tree(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open tree file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_tree(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_tree(const ModelTree& tree) {
  ordered_json j;
  j["model_name"] = tree.model_name;
  j["batch_size"] = tree.input_size.batch_size;
  j["seq_len"] = tree.input_size.seq_len;
  j["root"] = node_to_json(tree.root);
  return detail::dump(j);
}

void save_tree(const ModelTree& tree, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_tree(tree);
}

ValidationReport validate(const ModelTree& tree) {
  ValidationReport report;
  if (tree.model_name.empty()) report.push_back({"", "empty model_name"});
  if (tree.input_size.batch_size <= 0) report.push_back({"", "batch_size must be positive"});
  if (tree.input_size.seq_len <= 0) report.push_back({"", "seq_len must be positive"});
  if (tree.root.is_leaf()) report.push_back({"", "tree depth must be at least 2"});
  std::set<std::string> seen;
  validate_node(tree, tree.root, true, seen, report);
  return report;
}

std::vector<const Node*> nodes_at_level(const ModelTree& tree, Level level) {
  std::vector<const Node*> out;
  collect(tree.root, true, level, out);
  return out;
}

Level level_of(const ModelTree& tree, const Node& node) {
  if (&node == &tree.root) return Level::kModel;
  return node.is_leaf() ? Level::kMl : Level::kModule;
}

std::size_t depth(const ModelTree& tree) { return depth_of(tree.root); }

std::size_t node_count(const ModelTree& tree) {
  std::size_t n = 0;
  for_each_node(tree.root, [&](const Node&) { ++n; });
  return n;
}

std::string render_annotated(const ModelTree& tree, const PredictionMap& predictions) {
  auto root_it = predictions.find(tree.root.name);
  if (root_it == predictions.end()) {
    throw ValidationError("no prediction for node '" + tree.root.name + "'");
  }
  std::ostringstream out;
  render_node(tree.root, 0, root_it->second, predictions, out);
  return out.str();
}

}  // namespace enertree
