#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enertree/baseline.hpp"
#include "enertree/features.hpp"
#include "enertree/model_tree.hpp"

namespace enertree::synthetic {

// Tree layouts modelled on common Transformer implementations.
//   kBert:    depth 6, 11 leaves and 6 modules per layer
//   kDistil:  depth 5, 11 leaves and 3 modules per layer
//   kGpt2:    depth 4, 10 leaves and 3 modules per layer
//   kGeneric: depth 3, one block module per layer holding primitives_per_block
enum class Style { kBert, kDistil, kGpt2, kGeneric };

std::string_view to_string(Style style);
Style parse_style(std::string_view text);

struct Architecture {
  std::string model_name;
  Style style = Style::kBert;
  std::string type_prefix;  // "Bert", "Roberta", ...; defaulted per style when empty
  int n_layers = 2;
  int hidden = 768;
  int intermediate = 3072;
  int heads = 12;
  int vocab = 30522;
  std::vector<std::string> primitives_per_block;  // kGeneric only

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct Spec {
  std::vector<Architecture> models;
  std::vector<int> batch_sizes{8, 16, 24, 32};
  std::vector<int> seq_lens{32, 64, 96, 128, 160, 192, 224};
  std::uint64_t seed = 0;
  // Per-module-type multiplicative bias on the sum of children energies.
  double bias_min = 1.0;
  double bias_max = 1.0;
  // Temperature the bias range has to be representable under.
  double tau = 10.0;
  // Per-primitive oracle weights are scaled by exp(spread * u), u in [-1, 1].
  double leaf_weight_spread = 2.0;
  // Features the leaf oracle puts non-zero weight on; empty means all 12.
  std::vector<Feature> leaf_energy_features;

  friend bool operator==(const Spec&, const Spec&) = default;
};

// Empty when the spec is usable; otherwise one message per problem.
std::vector<std::string> check_spec(const Spec& spec);

struct LeafOracle {
  std::array<double, kNumFeatures> weights{};  // on raw (unnormalised) features
  double bias = 0.0;

  friend bool operator==(const LeafOracle&, const LeafOracle&) = default;
};

// The ground-truth energy model the generator draws labels from.
struct OracleParams {
  std::map<std::string, LeafOracle> leaves;  // by primitive
  std::map<std::string, double> module_bias;  // by type_name, includes the model root type

  friend bool operator==(const OracleParams&, const OracleParams&) = default;
};

// Leaf: oracle(features); internal: bias(type_name) * sum of child energies.
// Throws UnknownPrimitiveError / ValidationError for unknown primitives or
// module types.
PredictionMap oracle_energy(const OracleParams& params, const ModelTree& tree);

struct Dataset {
  std::vector<ModelTree> trees;  // models in spec order, grid batch-major
  OracleParams oracle;
};

// One tree per (model, batch, seq). Pure function of the spec.
// Throws ValidationError when check_spec reports problems.
Dataset generate_dataset(const Spec& spec);

// Single tree for one grid point, sharing the oracle of generate_dataset.
ModelTree generate_tree(const Spec& spec, const Architecture& arch, const OracleParams& oracle,
                        int batch_size, int seq_len, std::uint64_t stream);

OracleParams make_oracle(const Spec& spec);

// Preset architectures used by the bundled scenarios.
Architecture bert_base(std::string name = "bert-base");
Architecture distilbert(std::string name = "distilbert");
Architecture gpt2_small(std::string name = "gpt2");
// Six models across the four styles: bert-base, roberta-base, bert-small,
// distilbert, gpt2, gpt2-medium.
std::vector<Architecture> default_models();

std::string serialize_spec(const Spec& spec);
Spec parse_spec(std::string_view document);
Spec load_spec(const std::filesystem::path& path);

std::string serialize_oracle(const OracleParams& params);
OracleParams parse_oracle(std::string_view document);

// Resource-utilization trace of one inference run of `tree`, as a sampling
// profiler would see it: one window per 0.17 s of root latency, machine-wide
// resource energies (including other tenants and idle draw) and the share
// attributed to the inference process. Needs ground truth on the root.
ResourceTrace make_trace(const ModelTree& tree, std::uint64_t seed);

// "<model>_b<batch>_s<seq>"; file stem used by the CLI.
std::string tree_stem(const ModelTree& tree);

}  // namespace enertree::synthetic
