#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enertree/features.hpp"

namespace enertree {

enum class NodeKind { kModel, kModule, kMl };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(std::string_view text);

// One node of the model tree. Leaves (kind kMl) are framework primitives;
// module and model nodes encapsulate the computation of all their children.
// Child order is kept as given but does not encode execution order.
struct Node {
  std::string name;       // "TypeName:index", unique within a tree
  NodeKind kind = NodeKind::kMl;
  std::optional<std::string> primitive;  // present iff kind == kMl
  std::string type_name;  // name without the ":index" suffix
  FeatureVector features;
  std::optional<double> ground_truth_energy;  // joules
  std::vector<Node> children;

  bool is_leaf() const noexcept { return children.empty(); }

  friend bool operator==(const Node&, const Node&) = default;
};

struct InputSize {
  std::int64_t batch_size = 1;
  std::int64_t seq_len = 1;

  friend bool operator==(const InputSize&, const InputSize&) = default;
};

struct ModelTree {
  std::string model_name;
  InputSize input_size;
  Node root;

  friend bool operator==(const ModelTree&, const ModelTree&) = default;
};

// Node name -> joules. Ordered so that serialised output is deterministic.
using PredictionMap = std::map<std::string, double>;

enum class Level { kMl, kModule, kModel };

inline constexpr std::array<Level, 3> kAllLevels = {Level::kMl, Level::kModule, Level::kModel};

std::string_view to_string(Level level);

// "BertLayer:3" -> "BertLayer". Names without a numeric suffix are returned
// unchanged.
std::string strip_instance_index(std::string_view name);

// Tree file schema (JSON). Throws ParseError on malformed documents,
// duplicate names, leaves without a primitive, internal nodes without
// children and non-positive input sizes.
ModelTree parse_tree(std::string_view document);
ModelTree load_tree(const std::filesystem::path& path);

std::string serialize_tree(const ModelTree& tree);
void save_tree(const ModelTree& tree, const std::filesystem::path& path);

struct Violation {
  std::string node;  // empty for tree-level violations
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};
using ValidationReport = std::vector<Violation>;

// Every invariant violation of the tree; empty means valid.
ValidationReport validate(const ModelTree& tree);

// Depth-first, children in stored order. kMl: all leaves; kModule: internal
// non-root nodes; kModel: the root.
std::vector<const Node*> nodes_at_level(const ModelTree& tree, Level level);

// Level a node sits at, judged by its position in the tree.
Level level_of(const ModelTree& tree, const Node& node);

std::size_t depth(const ModelTree& tree);
std::size_t node_count(const ModelTree& tree);

// Pre-order visit.
template <typename Fn>
void for_each_node(const Node& node, Fn&& fn) {
  fn(node);
  for (const Node& child : node.children) for_each_node(child, fn);
}

// One line per node, indented two spaces per depth level. The root shows
// absolute joules, every other node its share of the root prediction.
// Throws ValidationError when a node has no prediction.
std::string render_annotated(const ModelTree& tree, const PredictionMap& predictions);

}  // namespace enertree
