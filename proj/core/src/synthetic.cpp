#include "enertree/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "enertree/error.hpp"
#include "enertree/leaf_regressors.hpp"
#include "json_util.hpp"

namespace enertree::synthetic {
namespace {

using detail::json;
using detail::ordered_json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Uniform in [-1, 1] from a hash key; used where a value must be recomputable
// from names alone.
double hashed_unit(std::uint64_t seed, std::string_view key, std::uint64_t salt = 0) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(hash_string(key) + salt));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// Sequential stream for per-tree feature noise.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}
  double unit() {  // [-1, 1)
    state_ = splitmix64(state_);
    return static_cast<double>(state_ >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  }

 private:
  std::uint64_t state_;
};

constexpr double kFeatureNoise = 0.01;
constexpr double kCtxBase = 38.0;
constexpr double kCtxSpread = 6.0;

// Functional role of a module; module bias and the context signature that
// children observe depend on the role only, so equivalent modules across
// architectures behave alike.
enum class Role {
  kModel,
  kEmbedding,
  kContainer,
  kBlock,
  kAttention,
  kSelfAttention,
  kProjection,
  kFeedForward,
  kPooler
};

std::string_view role_name(Role r) {
  switch (r) {
    case Role::kModel:
      return "model";
    case Role::kEmbedding:
      return "embedding";
    case Role::kContainer:
      return "container";
    case Role::kBlock:
      return "block";
    case Role::kAttention:
      return "attention";
    case Role::kSelfAttention:
      return "self_attention";
    case Role::kProjection:
      return "projection";
    case Role::kFeedForward:
      return "feed_forward";
    case Role::kPooler:
      return "pooler";
  }
  return "model";
}

// Structure before features are attached.
struct Proto {
  std::string type;
  Role role = Role::kModel;
  std::string primitive;  // leaves only
  double flops = 0.0;     // raw FLOPs
  double bytes = 0.0;     // raw bytes
  std::vector<Proto> children;
};

Proto leaf(std::string primitive, double flops, double bytes) {
  Proto p;
  p.primitive = std::move(primitive);
  p.type = p.primitive;
  p.flops = flops;
  p.bytes = bytes;
  return p;
}

Proto module(std::string type, Role role, std::vector<Proto> children) {
  Proto p;
  p.type = std::move(type);
  p.role = role;
  p.children = std::move(children);
  return p;
}

struct Dims {
  double batch;
  double seq;
  double hidden;
  double inter;
  double heads;
  double vocab;
  double tokens() const { return batch * seq; }
};

Proto linear_op(const char* prim, double in, double out, double tokens) {
  return leaf(prim, 2.0 * tokens * in * out, 4.0 * (tokens * in + in * out + tokens * out));
}

Proto elementwise(std::string prim, const Dims& d, double per_elem, double tokens) {
  const double n = tokens * d.hidden;
  return leaf(std::move(prim), per_elem * n, 8.0 * n);
}

Proto layer_norm(const Dims& d, double tokens) {
  const double n = tokens * d.hidden;
  return leaf("LayerNorm", 5.0 * n, 4.0 * (2.0 * n + 2.0 * d.hidden));
}

// Lookup cost does not depend on the table size.
Proto embedding(const Dims& d) {
  const double n = d.tokens() * d.hidden;
  return leaf("Embedding", n, 4.0 * n + 8.0 * d.tokens());
}

Proto attn_matmul(const Dims& d) {
  return leaf("MatMul", 2.0 * d.batch * d.seq * d.seq * d.hidden,
              4.0 * (2.0 * d.tokens() * d.hidden + d.batch * d.heads * d.seq * d.seq));
}

Proto softmax(const Dims& d) {
  const double n = d.batch * d.heads * d.seq * d.seq;
  return leaf("Softmax", 5.0 * n, 8.0 * n);
}

Proto generic_primitive(const std::string& prim, const Dims& d) {
  const double t = d.tokens();
  if (prim == "Linear" || prim == "Conv1D" || prim == "Conv1d") {
    return linear_op(prim.c_str(), d.hidden, d.hidden, t);
  }
  if (prim == "MatMul") return attn_matmul(d);
  if (prim == "Softmax") return softmax(d);
  if (prim == "LayerNorm" || prim == "BatchNorm1d") {
    Proto p = layer_norm(d, t);
    p.primitive = p.type = prim;
    return p;
  }
  if (prim == "Embedding") return embedding(d);
  if (prim == "LSTM") {
    return leaf(prim, 16.0 * t * d.hidden * d.hidden, 4.0 * (8.0 * d.hidden * d.hidden + 2.0 * t * d.hidden));
  }
  if (prim == "GELU") return elementwise(prim, d, 8.0, t);
  if (prim == "ReLU" || prim == "LeakyReLU") return elementwise(prim, d, 1.0, t);
  return elementwise(prim, d, 4.0, t);
}

std::string default_prefix(Style style) {
  switch (style) {
    case Style::kBert:
      return "Bert";
    case Style::kDistil:
      return "DistilBert";
    case Style::kGpt2:
      return "GPT2";
    case Style::kGeneric:
      return "Generic";
  }
  return "Bert";
}

Proto build_bert(const std::string& px, const Architecture& a, const Dims& d) {
  const double t = d.tokens();
  std::vector<Proto> layers;
  for (int l = 0; l < a.n_layers; ++l) {
    Proto self_attn = module(px + "SelfAttention", Role::kSelfAttention,
                             {linear_op("Linear", d.hidden, d.hidden, t),
                              linear_op("Linear", d.hidden, d.hidden, t),
                              linear_op("Linear", d.hidden, d.hidden, t), attn_matmul(d),
                              softmax(d), attn_matmul(d)});
    Proto self_out = module(px + "SelfOutput", Role::kProjection,
                            {linear_op("Linear", d.hidden, d.hidden, t), layer_norm(d, t)});
    Proto attention = module(px + "Attention", Role::kAttention,
                             {std::move(self_attn), std::move(self_out)});
    Proto intermediate = module(px + "Intermediate", Role::kFeedForward,
                                {linear_op("Linear", d.hidden, d.inter, t)});
    Proto output = module(px + "Output", Role::kProjection,
                          {linear_op("Linear", d.inter, d.hidden, t), layer_norm(d, t)});
    layers.push_back(module(px + "Layer", Role::kBlock,
                            {std::move(attention), std::move(intermediate), std::move(output)}));
  }
  Proto embeddings = module(px + "Embeddings", Role::kEmbedding,
                            {embedding(d), embedding(d), embedding(d),
                             layer_norm(d, t)});
  Proto encoder = module(px + "Encoder", Role::kContainer, std::move(layers));
  Proto pooler = module(px + "Pooler", Role::kPooler,
                        {linear_op("Linear", d.hidden, d.hidden, d.batch),
                         elementwise("Tanh", d, 4.0, d.batch)});
  return module(px + "Model", Role::kModel,
                {std::move(embeddings), std::move(encoder), std::move(pooler)});
}

Proto build_distil(const std::string& px, const Architecture& a, const Dims& d) {
  const double t = d.tokens();
  std::vector<Proto> blocks;
  for (int l = 0; l < a.n_layers; ++l) {
    Proto mhsa = module("MultiHeadSelfAttention", Role::kSelfAttention,
                        {linear_op("Linear", d.hidden, d.hidden, t),
                         linear_op("Linear", d.hidden, d.hidden, t),
                         linear_op("Linear", d.hidden, d.hidden, t), attn_matmul(d), softmax(d),
                         attn_matmul(d), linear_op("Linear", d.hidden, d.hidden, t)});
    Proto ffn = module("FFN", Role::kFeedForward,
                       {linear_op("Linear", d.hidden, d.inter, t),
                        linear_op("Linear", d.inter, d.hidden, t)});
    blocks.push_back(module("TransformerBlock", Role::kBlock,
                            {std::move(mhsa), layer_norm(d, t), std::move(ffn), layer_norm(d, t)}));
  }
  Proto embeddings = module("Embeddings", Role::kEmbedding,
                            {embedding(d), embedding(d), layer_norm(d, t)});
  Proto transformer = module("Transformer", Role::kContainer, std::move(blocks));
  return module(px + "Model", Role::kModel, {std::move(embeddings), std::move(transformer)});
}

Proto build_gpt2(const std::string& px, const Architecture& a, const Dims& d) {
  const double t = d.tokens();
  std::vector<Proto> top = {embedding(d), embedding(d)};
  for (int l = 0; l < a.n_layers; ++l) {
    Proto attn = module(px + "Attention", Role::kSelfAttention,
                        {linear_op("Conv1D", d.hidden, 3.0 * d.hidden, t), attn_matmul(d),
                         softmax(d), attn_matmul(d),
                         linear_op("Conv1D", d.hidden, d.hidden, t)});
    Proto mlp = module(px + "MLP", Role::kFeedForward,
                       {linear_op("Conv1D", d.hidden, d.inter, t),
                        elementwise("GELU", d, 8.0 * d.inter / d.hidden, t),
                        linear_op("Conv1D", d.inter, d.hidden, t)});
    top.push_back(module(px + "Block", Role::kBlock,
                         {layer_norm(d, t), std::move(attn), layer_norm(d, t), std::move(mlp)}));
  }
  top.push_back(layer_norm(d, t));
  return module(px + "Model", Role::kModel, std::move(top));
}

Proto build_generic(const std::string& px, const Architecture& a, const Dims& d) {
  std::vector<Proto> blocks;
  for (int l = 0; l < a.n_layers; ++l) {
    std::vector<Proto> leaves;
    for (const auto& prim : a.primitives_per_block) leaves.push_back(generic_primitive(prim, d));
    blocks.push_back(module(px + "Block", Role::kBlock, std::move(leaves)));
  }
  return module(px + "Model", Role::kModel, std::move(blocks));
}

Proto build(const Architecture& a, int batch, int seq) {
  const std::string px = a.type_prefix.empty() ? default_prefix(a.style) : a.type_prefix;
  const Dims d{static_cast<double>(batch), static_cast<double>(seq),
               static_cast<double>(a.hidden), static_cast<double>(a.intermediate),
               static_cast<double>(a.heads), static_cast<double>(a.vocab)};
  switch (a.style) {
    case Style::kBert:
      return build_bert(px, a, d);
    case Style::kDistil:
      return build_distil(px, a, d);
    case Style::kGpt2:
      return build_gpt2(px, a, d);
    case Style::kGeneric:
      return build_generic(px, a, d);
  }
  return build_bert(px, a, d);
}

double param_mib(const Architecture& a) {
  const double h = a.hidden;
  const double params = a.vocab * h + a.n_layers * (4.0 * h * h + 2.0 * h * a.intermediate);
  return 4.0 * params / (1024.0 * 1024.0);
}

void collect_roles(const Proto& p, std::map<std::string, Role>& roles,
                   std::set<std::string>& primitives) {
  if (p.children.empty()) {
    primitives.insert(p.primitive);
    return;
  }
  roles.emplace(p.type, p.role);
  for (const Proto& c : p.children) collect_roles(c, roles, primitives);
}

double signature(std::uint64_t seed, Role role) {
  if (role == Role::kModel) return 0.0;
  return hashed_unit(seed, role_name(role), 0x5167);
}

struct Builder {
  const Architecture& arch;
  int batch;
  int seq;
  std::uint64_t seed;
  Stream noise;
  std::map<std::string, int> counters;

  double jitter(double v) { return v * (1.0 + kFeatureNoise * noise.unit()); }
  double pct(double v) { return std::clamp(jitter(v), 0.0, 100.0); }

  std::string next_name(const std::string& type) {
    const int idx = counters[type]++;
    return type + ":" + std::to_string(idx);
  }

  Node make(const Proto& p, double context) {
    Node node;
    node.name = next_name(p.type);
    node.type_name = p.type;
    FeatureVector& f = node.features;
    f[Feature::kBatchSize] = batch;
    f[Feature::kSeqLen] = seq;
    if (p.children.empty()) {
      node.kind = NodeKind::kMl;
      node.primitive = p.primitive;
      leaf_features(p, context, f);
      return node;
    }
    node.kind = p.role == Role::kModel ? NodeKind::kModel : NodeKind::kModule;
    const double own_sig = signature(seed, p.role);
    double latency = 0.0;
    std::array<double, 5> weighted{};
    for (const Proto& c : p.children) {
      node.children.push_back(make(c, own_sig));
      const FeatureVector& cf = node.children.back().features;
      f[Feature::kFlops] += cf[Feature::kFlops];
      f[Feature::kMemBytes] += cf[Feature::kMemBytes];
      f[Feature::kGpuEnergy] += cf[Feature::kGpuEnergy];
      const double lat = cf[Feature::kLatency];
      latency += lat;
      weighted[0] += lat * cf[Feature::kCpuUtil];
      weighted[1] += lat * cf[Feature::kGpuUtil];
      weighted[2] += lat * cf[Feature::kGmUsg];
      weighted[3] += lat * cf[Feature::kGClk];
      weighted[4] += lat * cf[Feature::kGmClk];
    }
    f[Feature::kLatency] = latency;
    f[Feature::kCpuUtil] = std::clamp(weighted[0] / latency, 0.0, 100.0);
    f[Feature::kGpuUtil] = std::clamp(weighted[1] / latency, 0.0, 100.0);
    f[Feature::kGmUsg] = std::clamp(weighted[2] / latency, 0.0, 100.0);
    f[Feature::kGClk] = weighted[3] / latency;
    f[Feature::kGmClk] = weighted[4] / latency;
    f[Feature::kMemUsg] = pct(kCtxBase + kCtxSpread * context);
    return node;
  }

  void leaf_features(const Proto& p, double context, FeatureVector& f) {
    const bool dense = p.primitive == "Linear" || p.primitive == "Conv1D" ||
                       p.primitive == "Conv1d" || p.primitive == "MatMul" || p.primitive == "LSTM";
    const double overhead = 8e-6 * (1.0 + 0.25 * (hashed_unit(0, p.primitive) + 1.0));
    const double compute_t = p.flops / (dense ? 1.2e13 : 2.0e12);
    const double mem_t = p.bytes / 4.5e11;
    const double busy = std::max(compute_t, mem_t) + 0.3 * std::min(compute_t, mem_t);
    const double latency = overhead + busy;
    const double gpu_util = 97.0 * busy / latency;
    const double gm_usg = std::min(95.0, 18.0 + param_mib(arch) / 200.0 + batch * seq / 400.0);

    f[Feature::kFlops] = jitter(p.flops / 1e6);
    f[Feature::kMemBytes] = jitter(p.bytes / (1024.0 * 1024.0));
    f[Feature::kLatency] = jitter(latency);
    f[Feature::kGpuUtil] = pct(gpu_util);
    f[Feature::kCpuUtil] = pct(12.0 + 55.0 * overhead / latency);
    f[Feature::kMemUsg] = pct(kCtxBase + kCtxSpread * context);
    f[Feature::kGmUsg] = pct(gm_usg);
    f[Feature::kGClk] = jitter(1395.0 + 360.0 * gpu_util / 100.0);
    f[Feature::kGmClk] = jitter(5001.0 + 800.0 * mem_t / (compute_t + mem_t));
    f[Feature::kGpuEnergy] = jitter(latency * (38.0 + 1.9 * gpu_util));
  }
};

// Typical magnitude per feature so that each contributes comparably to a
// leaf's energy.
constexpr std::array<double, kNumFeatures> kLeafWeightScale = {
    2e-6,  // batch_size
    2e-7,  // seq_len
    4e-6,  // flops (J per MFLOP)
    1.5e-4,  // mem_bytes (J per MiB)
    5e-6,  // cpu_util
    5e-6,  // mem_usg
    2e-5,  // gpu_util
    5e-6,  // gm_usg
    2e-8,  // g_clk
    5e-9,  // gm_clk
    60.0,  // latency (W)
    0.6,   // gpu_energy
};

LeafOracle make_leaf_oracle(const Spec& spec, const std::string& primitive) {
  LeafOracle o;
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    const auto f = static_cast<Feature>(k);
    const bool active = spec.leaf_energy_features.empty() ||
                        std::find(spec.leaf_energy_features.begin(),
                                  spec.leaf_energy_features.end(),
                                  f) != spec.leaf_energy_features.end();
    if (!active) continue;
    const double m = std::exp(spec.leaf_weight_spread * hashed_unit(spec.seed, primitive, 100 + k));
    o.weights[k] = kLeafWeightScale[k] * m;
  }
  o.bias = 2e-5 * std::exp(spec.leaf_weight_spread * hashed_unit(spec.seed, primitive, 999));
  return o;
}

std::map<std::string, Role> roles_of(const Spec& spec, std::set<std::string>& primitives) {
  std::map<std::string, Role> roles;
  for (const Architecture& a : spec.models) collect_roles(build(a, 1, 1), roles, primitives);
  return roles;
}

double leaf_value(const OracleParams& params, const Node& leaf) {
  auto it = params.leaves.find(*leaf.primitive);
  if (it == params.leaves.end()) throw UnknownPrimitiveError(*leaf.primitive);
  double e = it->second.bias;
  for (std::size_t k = 0; k < kNumFeatures; ++k) e += it->second.weights[k] * leaf.features.values[k];
  return e;
}

double oracle_rec(const OracleParams& params, const Node& node, PredictionMap& out) {
  double e = 0.0;
  if (node.is_leaf()) {
    if (!node.primitive) throw ValidationError("leaf '" + node.name + "' has no primitive");
    e = leaf_value(params, node);
  } else {
    auto it = params.module_bias.find(node.type_name);
    if (it == params.module_bias.end()) {
      throw ValidationError("oracle has no bias for module type '" + node.type_name + "'");
    }
    double sum = 0.0;
    for (const Node& c : node.children) sum += oracle_rec(params, c, out);
    e = it->second * sum;
  }
  out.emplace(node.name, e);
  return e;
}

void assign_truth(Node& node, const PredictionMap& truth) {
  node.ground_truth_energy = truth.at(node.name);
  for (Node& c : node.children) assign_truth(c, truth);
}

ordered_json arch_to_json(const Architecture& a) {
  ordered_json j;
  j["model_name"] = a.model_name;
  j["style"] = std::string(to_string(a.style));
  if (!a.type_prefix.empty()) j["type_prefix"] = a.type_prefix;
  j["n_layers"] = a.n_layers;
  j["hidden"] = a.hidden;
  j["intermediate"] = a.intermediate;
  j["heads"] = a.heads;
  j["vocab"] = a.vocab;
  if (!a.primitives_per_block.empty()) j["primitives_per_block"] = a.primitives_per_block;
  return j;
}

int opt_int(const json& j, const char* key, int fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : static_cast<int>(detail::as_int(*it, key));
}

Architecture arch_from_json(const json& j) {
  Architecture a;
  a.model_name = detail::as_string(detail::require(j, "model_name", "model"), "model_name");
  if (auto it = j.find("style"); it != j.end()) {
    try {
      a.style = parse_style(detail::as_string(*it, "style"));
    } catch (const ValidationError& e) {
      throw ParseError(e.what());
    }
  }
  if (auto it = j.find("type_prefix"); it != j.end()) a.type_prefix = detail::as_string(*it, "type_prefix");
  a.n_layers = opt_int(j, "n_layers", a.n_layers);
  a.hidden = opt_int(j, "hidden", a.hidden);
  a.intermediate = opt_int(j, "intermediate", a.intermediate);
  a.heads = opt_int(j, "heads", a.heads);
  a.vocab = opt_int(j, "vocab", a.vocab);
  if (auto it = j.find("primitives_per_block"); it != j.end()) {
    if (!it->is_array()) throw ParseError("primitives_per_block must be an array");
    for (const auto& p : *it) a.primitives_per_block.push_back(detail::as_string(p, "primitive"));
  }
  return a;
}

std::vector<int> int_array(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
  std::vector<int> out;
  for (const auto& v : j) out.push_back(static_cast<int>(detail::as_int(v, what)));
  return out;
}

}  // namespace

std::string_view to_string(Style style) {
  switch (style) {
    case Style::kBert:
      return "bert";
    case Style::kDistil:
      return "distil";
    case Style::kGpt2:
      return "gpt2";
    case Style::kGeneric:
      return "generic";
  }
  return "bert";
}

Style parse_style(std::string_view text) {
  if (text == "bert") return Style::kBert;
  if (text == "distil" || text == "distilbert") return Style::kDistil;
  if (text == "gpt2") return Style::kGpt2;
  if (text == "generic") return Style::kGeneric;
  throw ValidationError("unknown architecture style '" + std::string(text) + "'");
}

std::vector<std::string> check_spec(const Spec& spec) {
  std::vector<std::string> problems;
  if (spec.models.empty()) problems.emplace_back("no models");
  std::set<std::string> names;
  for (const Architecture& a : spec.models) {
    const std::string who = "model '" + a.model_name + "': ";
    if (a.model_name.empty()) problems.emplace_back("model with empty name");
    if (!names.insert(a.model_name).second) problems.push_back(who + "duplicate name");
    if (a.n_layers < 1) problems.push_back(who + "n_layers must be >= 1");
    if (a.hidden < 1 || a.intermediate < 1 || a.vocab < 1) {
      problems.push_back(who + "dimensions must be positive");
    }
    if (a.heads < 1 || (a.hidden >= 1 && a.hidden % a.heads != 0)) {
      problems.push_back(who + "heads must divide hidden");
    }
    if (a.style == Style::kGeneric && a.primitives_per_block.empty()) {
      problems.push_back(who + "generic style needs primitives_per_block");
    }
    for (const auto& p : a.primitives_per_block) {
      if (p.empty()) problems.push_back(who + "empty primitive name");
    }
  }
  if (spec.batch_sizes.empty() || spec.seq_lens.empty()) problems.emplace_back("empty input grid");
  for (int b : spec.batch_sizes) {
    if (b < 1) problems.emplace_back("batch sizes must be >= 1");
  }
  for (int s : spec.seq_lens) {
    if (s < 1) problems.emplace_back("sequence lengths must be >= 1");
  }
  if (!(spec.tau > 0.0)) problems.emplace_back("tau must be positive");
  if (!(spec.bias_min <= spec.bias_max)) problems.emplace_back("bias range is empty");
  if (spec.tau > 0.0 &&
      (spec.bias_min < 1.0 - 1.0 / spec.tau - 1e-12 || spec.bias_max > 1.0 + 1.0 / spec.tau + 1e-12)) {
    problems.emplace_back("bias range must lie within [1 - 1/tau, 1 + 1/tau]");
  }
  if (!(spec.leaf_weight_spread >= 0.0)) problems.emplace_back("leaf_weight_spread must be >= 0");
  return problems;
}

OracleParams make_oracle(const Spec& spec) {
  std::set<std::string> primitives;
  const auto roles = roles_of(spec, primitives);
  OracleParams params;
  for (const auto& prim : primitives) params.leaves.emplace(prim, make_leaf_oracle(spec, prim));
  const double mid = 0.5 * (spec.bias_min + spec.bias_max);
  const double half = 0.5 * (spec.bias_max - spec.bias_min);
  for (const auto& [type, role] : roles) {
    params.module_bias.emplace(type, mid + half * signature(spec.seed, role));
  }
  return params;
}

PredictionMap oracle_energy(const OracleParams& params, const ModelTree& tree) {
  PredictionMap out;
  oracle_rec(params, tree.root, out);
  return out;
}

ModelTree generate_tree(const Spec& spec, const Architecture& arch, const OracleParams& oracle,
                        int batch_size, int seq_len, std::uint64_t stream) {
  Builder builder{arch, batch_size, seq_len, spec.seed, Stream(stream), {}};
  ModelTree tree;
  tree.model_name = arch.model_name;
  tree.input_size = {batch_size, seq_len};
  tree.root = builder.make(build(arch, batch_size, seq_len), 0.0);
  assign_truth(tree.root, oracle_energy(oracle, tree));
  return tree;
}

Dataset generate_dataset(const Spec& spec) {
  const auto problems = check_spec(spec);
  if (!problems.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValidationError(msg);
  }
  Dataset ds;
  ds.oracle = make_oracle(spec);
  for (std::size_t m = 0; m < spec.models.size(); ++m) {
    std::size_t grid = 0;
    for (int b : spec.batch_sizes) {
      for (int s : spec.seq_lens) {
        const std::uint64_t stream = splitmix64(spec.seed ^ splitmix64((m << 32) + grid));
        ds.trees.push_back(generate_tree(spec, spec.models[m], ds.oracle, b, s, stream));
        ++grid;
      }
    }
  }
  return ds;
}

ResourceTrace make_trace(const ModelTree& tree, std::uint64_t seed) {
  if (!tree.root.ground_truth_energy) throw ValidationError("trace needs root ground truth");
  const double energy = *tree.root.ground_truth_energy;
  const FeatureVector& f = tree.root.features;
  const std::string key = tree_stem(tree);
  const auto windows = static_cast<std::size_t>(
      std::max(1.0, std::ceil(f[Feature::kLatency] / 0.17)));
  // Machine totals exceed the process's own draw; how much depends on what
  // else ran, which the profiler cannot know.
  const double tenancy = 1.25 + 0.2 * hashed_unit(seed, key, 1);
  Stream noise(splitmix64(seed ^ hash_string(key)));
  ResourceTrace trace;
  for (std::size_t w = 0; w < windows; ++w) {
    const double slice = energy * tenancy / static_cast<double>(windows);
    ResourceSample s;
    s.process = "python";
    s.p_gpu = std::clamp(f[Feature::kGpuUtil] / 100.0 * (0.85 + 0.05 * noise.unit()), 0.0, 1.0);
    s.p_cpu = std::clamp(f[Feature::kCpuUtil] / 100.0 * (1.0 + 0.05 * noise.unit()), 0.0, 1.0);
    s.p_dram = std::clamp(0.4 + 0.05 * noise.unit(), 0.0, 1.0);
    s.e_gpu = slice * 0.78 * (1.0 + 0.03 * noise.unit());
    s.e_cpu = slice * 0.16 * (1.0 + 0.03 * noise.unit());
    s.e_dram = slice * 0.06 * (1.0 + 0.03 * noise.unit());
    trace.samples.push_back(std::move(s));
  }
  return trace;
}

Architecture bert_base(std::string name) {
  Architecture a;
  a.model_name = std::move(name);
  a.style = Style::kBert;
  a.n_layers = 12;
  return a;
}

Architecture distilbert(std::string name) {
  Architecture a;
  a.model_name = std::move(name);
  a.style = Style::kDistil;
  a.n_layers = 6;
  return a;
}

Architecture gpt2_small(std::string name) {
  Architecture a;
  a.model_name = std::move(name);
  a.style = Style::kGpt2;
  a.n_layers = 12;
  a.vocab = 50257;
  return a;
}

std::vector<Architecture> default_models() {
  Architecture roberta = bert_base("roberta-base");
  roberta.type_prefix = "Roberta";
  roberta.vocab = 50265;
  Architecture small = bert_base("bert-small");
  small.n_layers = 4;
  small.hidden = 512;
  small.intermediate = 2048;
  small.heads = 8;
  Architecture medium = gpt2_small("gpt2-medium");
  medium.n_layers = 8;
  medium.hidden = 1024;
  medium.intermediate = 4096;
  medium.heads = 16;
  return {bert_base(), roberta, small, distilbert(), gpt2_small(), medium};
}

std::string serialize_spec(const Spec& spec) {
  ordered_json j;
  j["seed"] = spec.seed;
  j["batch_sizes"] = spec.batch_sizes;
  j["seq_lens"] = spec.seq_lens;
  j["bias_range"] = {spec.bias_min, spec.bias_max};
  j["tau"] = spec.tau;
  j["leaf_weight_spread"] = spec.leaf_weight_spread;
  ordered_json feats = ordered_json::array();
  for (Feature f : spec.leaf_energy_features) feats.push_back(std::string(name_of(f)));
  j["leaf_energy_features"] = std::move(feats);
  ordered_json models = ordered_json::array();
  for (const auto& a : spec.models) models.push_back(arch_to_json(a));
  j["models"] = std::move(models);
  return detail::dump(j);
}

Spec parse_spec(std::string_view document) {
  const json j = detail::parse_json(document, "synthetic spec");
  if (!j.is_object()) throw ParseError("synthetic spec must be a JSON object");
  Spec spec;
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_integer()) throw ParseError("seed must be an integer");
    spec.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("batch_sizes"); it != j.end()) spec.batch_sizes = int_array(*it, "batch_sizes");
  if (auto it = j.find("seq_lens"); it != j.end()) spec.seq_lens = int_array(*it, "seq_lens");
  if (auto it = j.find("bias_range"); it != j.end()) {
    const auto range = detail::as_double_array(*it, "bias_range");
    if (range.size() != 2) throw ParseError("bias_range must have two entries");
    spec.bias_min = range[0];
    spec.bias_max = range[1];
  }
  if (auto it = j.find("tau"); it != j.end()) spec.tau = detail::as_double(*it, "tau");
  if (auto it = j.find("leaf_weight_spread"); it != j.end()) {
    spec.leaf_weight_spread = detail::as_double(*it, "leaf_weight_spread");
  }
  if (auto it = j.find("leaf_energy_features"); it != j.end()) {
    if (!it->is_array()) throw ParseError("leaf_energy_features must be an array");
    for (const auto& v : *it) {
      const auto name = detail::as_string(v, "leaf_energy_features");
      const auto f = feature_from_name(name);
      if (!f) throw ParseError("unknown feature '" + name + "'");
      spec.leaf_energy_features.push_back(*f);
    }
  }
  const auto& models = detail::require(j, "models", "synthetic spec");
  if (!models.is_array()) throw ParseError("models must be an array");
  for (const auto& m : models) spec.models.push_back(arch_from_json(m));
  return spec;
}

Spec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open spec file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

std::string serialize_oracle(const OracleParams& params) {
  ordered_json j;
  ordered_json leaves = ordered_json::object();
  for (const auto& [prim, o] : params.leaves) {
    ordered_json entry;
    ordered_json w = ordered_json::object();
    for (std::size_t k = 0; k < kNumFeatures; ++k) w[std::string(kFeatureNames[k])] = o.weights[k];
    entry["weights"] = std::move(w);
    entry["bias"] = o.bias;
    leaves[prim] = std::move(entry);
  }
  j["leaves"] = std::move(leaves);
  ordered_json bias = ordered_json::object();
  for (const auto& [type, b] : params.module_bias) bias[type] = b;
  j["module_bias"] = std::move(bias);
  return detail::dump(j);
}

OracleParams parse_oracle(std::string_view document) {
  const json j = detail::parse_json(document, "oracle params");
  OracleParams params;
  for (const auto& [prim, entry] : detail::require(j, "leaves", "oracle").items()) {
    LeafOracle o;
    const auto& w = detail::require(entry, "weights", "oracle leaf");
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      o.weights[k] = detail::as_double(detail::require(w, kFeatureNames[k], "oracle weights"), "weight");
    }
    o.bias = detail::as_double(detail::require(entry, "bias", "oracle leaf"), "bias");
    params.leaves.emplace(prim, o);
  }
  for (const auto& [type, b] : detail::require(j, "module_bias", "oracle").items()) {
    params.module_bias.emplace(type, detail::as_double(b, "module_bias"));
  }
  return params;
}

std::string tree_stem(const ModelTree& tree) {
  return tree.model_name + "_b" + std::to_string(tree.input_size.batch_size) + "_s" +
         std::to_string(tree.input_size.seq_len);
}

}  // namespace enertree::synthetic
