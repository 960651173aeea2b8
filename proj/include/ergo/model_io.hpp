#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ergo/chain_model.hpp"
#include "ergo/errors.hpp"
#include "ergo/rate_expr.hpp"
#include "ergo/weighting.hpp"

namespace ergo {

namespace detail {

inline RateExpr rate_from_json(const nlohmann::json& j, const std::string& where) {
  try {
    if (j.is_number()) return RateExpr::constant(j.get<double>());
    if (j.is_string()) return parse_rate(j.get<std::string>());
  } catch (const ParseError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": rate must be a string in the rate grammar (or a number)");
}

inline std::vector<RateExpr> rate_list(const nlohmann::json& j, const std::string& key, int expected) {
  if (!j.contains(key) || !j[key].is_array())
    throw ConfigError("model config: missing array field '" + key + "'");
  const auto& arr = j[key];
  if (static_cast<int>(arr.size()) != expected)
    throw ConfigError("model config: '" + key + "' must have " + std::to_string(expected) +
                      " entries, got " + std::to_string(arr.size()));
  std::vector<RateExpr> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(rate_from_json(arr[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Model config schema:
///   {"kind": "bdpc"|"szk"|"absorbing"|"general", "S": int,
///    "lambda": [rate...], "mu": [rate...], "xi": [rate...] (bdpc),
///    "q": [{"i": int, "j": int, "rate": rate}...] (absorbing/general)}
/// Rates are strings in the rate grammar.  Structural checks happen here;
/// nonnegativity/monotonicity checking belongs to validate().
inline ChainModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("model config: missing string field 'kind'");
  if (!j.contains("S") || !j["S"].is_number_integer())
    throw ConfigError("model config: missing integer field 'S'");
  const std::string kind = j["kind"].get<std::string>();
  const int S = j["S"].get<int>();
  if (S < 1) throw ConfigError("model config: S must be >= 1");

  try {
    if (kind == "bdpc")
      return ChainModel::bdpc(S, detail::rate_list(j, "lambda", S), detail::rate_list(j, "mu", S),
                              detail::rate_list(j, "xi", S), /*sample_check=*/false);
    if (kind == "szk")
      return ChainModel::szk(S, detail::rate_list(j, "lambda", S), detail::rate_list(j, "mu", S),
                             /*sample_check=*/false);
    if (kind == "absorbing" || kind == "general") {
      if (!j.contains("q") || !j["q"].is_array())
        throw ConfigError("model config: missing array field 'q'");
      std::vector<Transition> q;
      for (const auto& e : j["q"]) {
        if (!e.contains("i") || !e.contains("j") || !e.contains("rate"))
          throw ConfigError("model config: q entries need fields i, j, rate");
        q.push_back({e["i"].get<int>(), e["j"].get<int>(),
                     detail::rate_from_json(e["rate"], "q entry rate")});
      }
      return kind == "absorbing" ? ChainModel::absorbing(S, std::move(q), false)
                                 : ChainModel::general(S, std::move(q), false);
    }
  } catch (const ModelError& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  throw ConfigError("model config: unknown kind '" + kind + "'");
}

inline ChainModel load_model(const std::string& path) {
  return model_from_json(detail::parse_json_file(path));
}

/// Weights config schema: {"shape": "cumulative-upper"|"diagonal",
///                          "d": [positive reals, length S]}
inline WeightMatrix weights_from_json(const nlohmann::json& j) {
  if (!j.contains("shape") || !j["shape"].is_string())
    throw ConfigError("weights config: missing string field 'shape'");
  const std::string shape = j["shape"].get<std::string>();
  WeightShape ws;
  if (shape == "cumulative-upper") ws = WeightShape::cumulative_upper;
  else if (shape == "diagonal") ws = WeightShape::diagonal;
  else throw ConfigError("weights config: unknown shape '" + shape + "'");
  if (!j.contains("d") || !j["d"].is_array() || j["d"].empty())
    throw ConfigError("weights config: missing nonempty array field 'd'");
  Eigen::VectorXd d(j["d"].size());
  for (std::size_t i = 0; i < j["d"].size(); ++i) {
    if (!j["d"][i].is_number()) throw ConfigError("weights config: d entries must be numbers");
    d[i] = j["d"][i].get<double>();
  }
  try {
    return WeightMatrix(ws, std::move(d));
  } catch (const ModelError& e) {
    throw ConfigError(std::string("weights config: ") + e.what());
  }
}

inline WeightMatrix load_weights(const std::string& path) {
  return weights_from_json(detail::parse_json_file(path));
}

inline nlohmann::json weights_to_json(const WeightMatrix& D) {
  nlohmann::json j;
  j["shape"] = to_string(D.shape());
  j["d"] = nlohmann::json::array();
  for (int i = 0; i < D.dim(); ++i) j["d"].push_back(D.d()[i]);
  return j;
}

inline void save_weights(const WeightMatrix& D, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << weights_to_json(D).dump(2) << "\n";
}

}  // namespace ergo
