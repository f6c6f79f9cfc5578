#include "qvnn/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "qvnn/errors.hpp"

namespace qvnn {

using nlohmann::json;

namespace {

json strip_comments(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.key().empty() && it.key()[0] == '_') continue;
      out[it.key()] = strip_comments(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& e : j) out.push_back(strip_comments(e));
    return out;
  }
  return j;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw InputError("unknown key '" + it.key() + "' in " + where);
  }
}

const json& require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw InputError("missing key '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw InputError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(what + " must be finite");
  return v;
}

RealVector real_list(const json& j, int n, const std::string& what) {
  if (j.is_number()) return RealVector::Constant(n, number(j, what));
  if (!j.is_array()) throw InputError(what + " must be a number or a list");
  if (static_cast<int>(j.size()) != n) throw ShapeError(what + " must have n entries");
  RealVector v(n);
  for (int i = 0; i < n; ++i) v(i) = number(j[i], what);
  return v;
}

std::vector<Quaternion> quat_list(const json& j, int n, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw ShapeError(what + " must be a list of n quaternions");
  }
  std::vector<Quaternion> out;
  for (const auto& e : j) out.push_back(quaternion_from_json(e));
  return out;
}

DelaySpec parse_delay(const json& j, const std::string& what) {
  check_keys(j, {"kind", "value", "amplitude", "offset", "phase", "omega", "clamp_negative"}, what);
  const json& kind = require(j, "kind");
  if (kind == "constant") {
    return DelaySpec::constant_delay(number(require(j, "value"), what + ".value"));
  }
  if (kind != "sinusoid") throw InputError(what + ".kind must be 'constant' or 'sinusoid'");
  DelaySpec d = DelaySpec::sinusoid(number(require(j, "amplitude"), what + ".amplitude"),
                                    number(require(j, "offset"), what + ".offset"),
                                    number(j.value("phase", json(0.0)), what + ".phase"),
                                    number(j.value("omega", json(1.0)), what + ".omega"));
  if (j.contains("clamp_negative")) {
    if (!j["clamp_negative"].is_boolean()) throw InputError(what + ".clamp_negative must be bool");
    d.clamp_negative = j["clamp_negative"].get<bool>();
  }
  return d;
}

json delay_to_json(const DelaySpec& d) {
  if (d.kind == DelaySpec::Kind::constant) return {{"kind", "constant"}, {"value", d.value}};
  return {{"kind", "sinusoid"}, {"amplitude", d.amplitude}, {"offset", d.offset},
          {"phase", d.phase},   {"omega", d.omega},         {"clamp_negative", d.clamp_negative}};
}

void check_delay(const DelaySpec& d, double bound, double rate, const std::string& what) {
  const double tol = 1e-12 * std::max(1.0, bound);
  if (d.bound() > bound + tol) {
    throw InputError(what + "(t) exceeds its declared upper bound " + std::to_string(bound));
  }
  if (d.rate_bound() > rate + 1e-12 * std::max(1.0, rate)) {
    throw InputError(what + "(t) changes faster than its declared rate bound " +
                     std::to_string(rate));
  }
  if (!d.clamp_negative && d.kind == DelaySpec::Kind::sinusoid &&
      d.offset - std::abs(d.amplitude) < 0.0) {
    throw InputError(what + "(t) becomes negative and clamping is disabled");
  }
}

}  // namespace

ModelConfig parse_model_config(const json& raw) {
  const json j = strip_comments(raw);
  check_keys(j,
             {"n", "C", "A", "B", "delta", "d1", "d2", "mu1", "mu2", "gamma", "activation",
              "delay_functions", "external_input", "equilibrium"},
             "model config");
  ModelConfig cfg;
  NetworkModel& m = cfg.model;
  const json& jn = require(j, "n");
  if (!jn.is_number_integer() || jn.get<long>() <= 0) throw InputError("n must be a positive integer");
  m.n = jn.get<int>();
  m.c = real_list(require(j, "C"), m.n, "C");
  m.a = quat_matrix_from_json(require(j, "A"));
  m.b = quat_matrix_from_json(require(j, "B"));
  m.delta = number(require(j, "delta"), "delta");
  m.d1 = number(require(j, "d1"), "d1");
  m.d2 = number(require(j, "d2"), "d2");
  m.mu1 = number(require(j, "mu1"), "mu1");
  m.mu2 = number(require(j, "mu2"), "mu2");
  m.gamma = real_list(require(j, "gamma"), m.n, "gamma");
  m.activation_gain = m.gamma;
  if (j.contains("activation")) {
    const json& act = j["activation"];
    check_keys(act, {"kind", "gain"}, "activation");
    if (act.value("kind", std::string("split_tanh")) != "split_tanh") {
      throw InputError("only the split_tanh activation is supported");
    }
    m.activation_gain = real_list(require(act, "gain"), m.n, "activation.gain");
  }
  if (j.contains("external_input")) m.external_input = quat_list(j["external_input"], m.n, "external_input");
  if (j.contains("equilibrium")) m.equilibrium = quat_list(j["equilibrium"], m.n, "equilibrium");
  m.validate();

  cfg.delays = {DelaySpec::constant_delay(m.d1), DelaySpec::constant_delay(m.d2)};
  if (j.contains("delay_functions")) {
    const json& df = j["delay_functions"];
    check_keys(df, {"d1", "d2"}, "delay_functions");
    if (df.contains("d1")) cfg.delays.d1 = parse_delay(df["d1"], "delay_functions.d1");
    if (df.contains("d2")) cfg.delays.d2 = parse_delay(df["d2"], "delay_functions.d2");
  }
  check_delay(cfg.delays.d1, m.d1, m.mu1, "d1");
  check_delay(cfg.delays.d2, m.d2, m.mu2, "d2");
  cfg.source = j;
  return cfg;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path + ": " + e.what());
  }
  try {
    return parse_model_config(j);
  } catch (const json::exception& e) {
    throw InputError("invalid config " + path + ": " + e.what());
  }
}

json model_config_to_json(const NetworkModel& m, const DelayPair& delays) {
  json j;
  j["n"] = m.n;
  j["C"] = std::vector<double>(m.c.data(), m.c.data() + m.c.size());
  j["A"] = to_json(m.a);
  j["B"] = to_json(m.b);
  j["delta"] = m.delta;
  j["d1"] = m.d1;
  j["d2"] = m.d2;
  j["mu1"] = m.mu1;
  j["mu2"] = m.mu2;
  j["gamma"] = std::vector<double>(m.gamma.data(), m.gamma.data() + m.gamma.size());
  j["activation"] = {{"kind", "split_tanh"},
                     {"gain", std::vector<double>(m.activation_gain.data(),
                                                  m.activation_gain.data() + m.activation_gain.size())}};
  j["delay_functions"] = {{"d1", delay_to_json(delays.d1)}, {"d2", delay_to_json(delays.d2)}};
  auto qlist = [](const std::vector<Quaternion>& v) {
    json out = json::array();
    for (const auto& q : v) out.push_back(to_json(q));
    return out;
  };
  if (m.external_input) j["external_input"] = qlist(*m.external_input);
  if (m.equilibrium) j["equilibrium"] = qlist(*m.equilibrium);
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string config_hash(const ModelConfig& cfg) {
  // Hash the normalized model, so equivalent spellings (scalar vs list gamma,
  // omitted defaults) hash alike while any semantic change alters the hash.
  return sha256_hex(model_config_to_json(cfg.model, cfg.delays).dump());
}

}  // namespace qvnn
