#pragma once

// Model configuration files.
//
// {
//   "n": 2, "C": [8, 12], "A": <quat matrix>, "B": <quat matrix>,
//   "delta": 0.5, "d1": 0.7, "d2": 0.1, "mu1": 0.45, "mu2": 0.15,
//   "gamma": [0.2, 0.2],
//   "activation": {"kind": "split_tanh", "gain": 0.2},          // optional
//   "delay_functions": {"d1": <delay>, "d2": <delay>},          // optional
//   "external_input": [[w,x,y,z], ...], "equilibrium": [...]   // optional
// }
//
// <delay> is {"kind": "constant", "value": v} or
// {"kind": "sinusoid", "amplitude": a, "offset": o, "phase": p, "omega": w,
//  "clamp_negative": true}. Without delay_functions the delays are the
// constants d1 and d2. Unknown keys are rejected; keys starting with "_"
// are treated as comments.

#include <string>

#include "json.hpp"
#include "qvnn/dde.hpp"
#include "qvnn/network_model.hpp"

namespace qvnn {

struct ModelConfig {
  NetworkModel model;
  DelayPair delays;
  nlohmann::json source;  // parsed document without comment keys
};

/// Throws InputError / ShapeError on malformed or inconsistent input, including
/// delay functions whose bound or rate bound exceed d1, d2, mu1, mu2.
ModelConfig parse_model_config(const nlohmann::json& j);
ModelConfig load_model_config(const std::string& path);

/// Serializes a model (and delays) back into the config schema.
nlohmann::json model_config_to_json(const NetworkModel& model, const DelayPair& delays);

/// Lowercase hex SHA-256 of the canonical (sorted-key, compact) dump of the
/// parsed configuration. Formatting and comment keys do not affect it.
std::string config_hash(const ModelConfig& cfg);
std::string sha256_hex(const std::string& bytes);

}  // namespace qvnn
