#include "serialization.hpp"

namespace enertree::detail {

ordered_json normalizer_to_json(const Normalizer& norm) {
  ordered_json j;
  j["subset"] = std::string(to_string(norm.subset()));
  j["mean"] = norm.mean();
  j["std"] = norm.stddev();
  return j;
}

Normalizer normalizer_from_json(const json& j) {
  const auto subset = parse_subset(as_string(require(j, "subset", "normalizer"), "subset"));
  auto mean = as_double_array(require(j, "mean", "normalizer"), "normalizer.mean");
  auto stddev = as_double_array(require(j, "std", "normalizer"), "normalizer.std");
  try {
    return Normalizer(subset, std::move(mean), std::move(stddev));
  } catch (const ValidationError& e) {
    throw ParseError(std::string("normalizer: ") + e.what());
  }
}

ordered_json linear_to_json(const LinearRegressor& reg) {
  ordered_json j;
  j["weights"] = reg.weights;
  j["bias"] = reg.bias;
  j["n_samples"] = reg.n_samples;
  j["normalizer"] = normalizer_to_json(reg.normalizer);
  return j;
}

LinearRegressor linear_from_json(const json& j) {
  LinearRegressor reg;
  reg.weights = as_double_array(require(j, "weights", "regressor"), "weights");
  reg.bias = as_double(require(j, "bias", "regressor"), "bias");
  reg.n_samples = static_cast<std::size_t>(as_int(require(j, "n_samples", "regressor"), "n_samples"));
  reg.normalizer = normalizer_from_json(require(j, "normalizer", "regressor"));
  if (reg.weights.size() != reg.normalizer.dimension()) {
    throw ParseError("regressor weight count does not match its normalizer");
  }
  return reg;
}

}  // namespace enertree::detail
