#pragma once

#include "enertree/linear_model.hpp"
#include "enertree/normalizer.hpp"
#include "json_util.hpp"

namespace enertree::detail {

ordered_json normalizer_to_json(const Normalizer& norm);
Normalizer normalizer_from_json(const json& j);

ordered_json linear_to_json(const LinearRegressor& reg);
LinearRegressor linear_from_json(const json& j);

}  // namespace enertree::detail
