#include "enertree/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace enertree {

namespace {

using detail::json;
using detail::ordered_json;

void apply_train(const json& t, TrainHyper& h) {
  if (!t.is_object()) throw ParseError("scenario train section must be an object");
  for (const auto& [key, v] : t.items()) {
    if (key == "learning_rate") {
      h.learning_rate = detail::as_double(v, "train.learning_rate");
    } else if (key == "epochs") {
      h.epochs = static_cast<int>(detail::as_int(v, "train.epochs"));
    } else if (key == "tau") {
      h.tau = detail::as_double(v, "train.tau");
    } else if (key == "seed") {
      if (!v.is_number_integer()) throw ParseError("train.seed must be an integer");
      h.seed = v.get<std::uint64_t>();
    } else if (key == "subset") {
      h.subset = parse_subset(detail::as_string(v, "train.subset"));
    } else if (key == "patience") {
      h.patience = static_cast<int>(detail::as_int(v, "train.patience"));
    } else if (key == "min_improvement") {
      h.min_improvement = detail::as_double(v, "train.min_improvement");
    } else {
      throw ParseError("unknown key 'train." + key + "'");
    }
  }
}

}  // namespace

Scenario parse_scenario(std::string_view document) {
  const json j = detail::parse_json(document, "scenario");
  if (!j.is_object()) throw ParseError("scenario must be a JSON object");
  Scenario s;
  json spec_part = j;
  if (auto it = j.find("train"); it != j.end()) {
    apply_train(*it, s.hyper);
    spec_part.erase("train");
  }
  s.spec = synthetic::parse_spec(spec_part.dump());
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& scenario) {
  ordered_json j = ordered_json::parse(synthetic::serialize_spec(scenario.spec));
  const TrainHyper& h = scenario.hyper;
  ordered_json t;
  t["learning_rate"] = h.learning_rate;
  t["epochs"] = h.epochs;
  t["tau"] = h.tau;
  t["seed"] = h.seed;
  t["subset"] = std::string(to_string(h.subset));
  t["patience"] = h.patience;
  t["min_improvement"] = h.min_improvement;
  j["train"] = std::move(t);
  return detail::dump(j);
}

}  // namespace enertree
