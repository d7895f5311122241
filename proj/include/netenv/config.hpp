#pragma once

// JSON experiment configs. Every object is read strictly: unknown keys and
// wrong types raise ConfigError naming the offending path.
//
//   {
//     "seed": 7,
//     "scenario": {"network": {...}, "gray": {...}, "red": {...}, "reward": {...}, "horizon": 100},
//     "train": {...},
//     "distribution": {...},          // optional
//     "curriculum": {"window": 100, "stages": [{"distribution": {...}, "threshold": 0.5}]}  // optional
//   }

#include <cstdint>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "netenv/envdist.hpp"
#include "netenv/error.hpp"
#include "netenv/learner.hpp"
#include "netenv/scenario.hpp"

namespace netenv {

using Json = nlohmann::json;

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ScenarioConfig scenario;
  TrainConfig train;
  std::optional<EnvironmentDistribution> distribution;
  std::optional<Curriculum> curriculum;
};

namespace detail {

/// Reads fields from one JSON object and rejects whatever was not read.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(child(key) + " must be a number");
      out = v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) {
        throw ConfigError(child(key) + " must be a non-negative integer");
      }
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(child(key) + " must be a string");
      out = v.get<std::string>();
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown key '" + child(k) + "'");
    }
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline NetworkConfig parse_network(const Json& j, const std::string& path) {
  NetworkConfig n;
  ObjectReader r(j, path);
  r.read("hosts", n.hosts);
  r.read("service_rate", n.service_rate);
  r.read("decoys", n.decoys);
  if (r.has("services")) {
    const Json& s = r.raw("services");
    if (!s.is_array()) throw ConfigError(r.child("services") + " must be an array of service names");
    n.services.clear();
    for (const auto& e : s) {
      const auto svc = e.is_string() ? parse_service(e.get<std::string>()) : std::nullopt;
      if (!svc) throw ConfigError(r.child("services") + " has unknown service " + e.dump());
      n.services.push_back(*svc);
    }
  }
  if (r.has("jewel_host")) {
    const Json& v = r.raw("jewel_host");
    if (!v.is_null()) {
      if (!v.is_number_unsigned()) throw ConfigError(r.child("jewel_host") + " must be a host id or null");
      n.jewel_host = v.get<HostId>();
    }
  }
  r.finish();
  return n;
}

inline void parse_probabilities(ObjectReader& r, const std::vector<std::string>& keys,
                                const std::function<double&(const std::string&)>& field) {
  for (const auto& k : keys) r.read(k, field(k));
}

inline ScenarioConfig parse_scenario(const Json& j, const std::string& path) {
  ScenarioConfig s;
  ObjectReader r(j, path);
  if (r.has("network")) s.network = parse_network(r.raw("network"), r.child("network"));
  if (r.has("gray")) {
    ObjectReader g(r.raw("gray"), r.child("gray"));
    parse_probabilities(g, gray_rate_keys(), [&](const std::string& k) -> double& { return gray_field(s.gray, k); });
    g.finish();
  }
  if (r.has("red")) {
    ObjectReader t(r.raw("red"), r.child("red"));
    if (t.has("variant")) {
      std::string v;
      t.read("variant", v);
      const auto parsed = parse_red_variant(v);
      if (!parsed) throw ConfigError(t.child("variant") + " must be \"faithful\" or \"deceptive\"");
      s.variant = *parsed;
    }
    parse_probabilities(t, ttp_keys(), [&](const std::string& k) -> double& { return ttp_field(s.red, k); });
    t.read("k", s.red.k);
    t.finish();
  }
  if (r.has("reward")) {
    ObjectReader w(r.raw("reward"), r.child("reward"));
    parse_probabilities(w, reward_keys(), [&](const std::string& k) -> double& { return reward_field(s.reward, k); });
    w.finish();
  }
  r.read("horizon", s.horizon);
  r.finish();
  s.validate();
  return s;
}

inline TrainConfig parse_train(const Json& j, const std::string& path) {
  TrainConfig t;
  ObjectReader r(j, path);
  r.read("learning_rate", t.learning_rate);
  r.read("gamma", t.gamma);
  r.read("epsilon_start", t.epsilon_start);
  r.read("epsilon_end", t.epsilon_end);
  r.read("epsilon_fraction", t.epsilon_fraction);
  r.read("target_sync", t.target_sync);
  r.read("batch_size", t.batch_size);
  r.read("total_steps", t.total_steps);
  r.read("hidden", t.hidden);
  r.read("replay_capacity", t.replay_capacity);
  r.read("learning_starts", t.learning_starts);
  r.read("train_every", t.train_every);
  r.read("adam_beta1", t.adam_beta1);
  r.read("adam_beta2", t.adam_beta2);
  r.read("adam_eps", t.adam_eps);
  r.read("divergence_limit", t.divergence_limit);
  r.finish();
  t.validate();
  return t;
}

inline std::map<std::string, Interval> parse_intervals(const Json& j, const std::string& path,
                                                       const std::vector<std::string>& allowed) {
  std::map<std::string, Interval> out;
  ObjectReader r(j, path);
  for (const auto& k : allowed) {
    if (!r.has(k)) continue;
    const Json& v = r.raw(k);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(r.child(k) + " must be [lo, hi]");
    }
    out[k] = {v[0].get<double>(), v[1].get<double>()};
  }
  r.finish();
  return out;
}

inline EnvironmentDistribution parse_distribution(const Json& j, const std::string& path, const ScenarioConfig& base) {
  EnvironmentDistribution d = EnvironmentDistribution::point_mass(base);
  ObjectReader r(j, path);
  if (r.has("host_count")) {
    const Json& v = r.raw("host_count");
    if (!v.is_array() || v.empty()) throw ConfigError(r.child("host_count") + " must be a non-empty array of integers");
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) throw ConfigError(r.child("host_count") + " entries must be non-negative integers");
      d.host_counts.push_back(e.get<std::size_t>());
    }
  }
  if (r.has("gray")) d.gray = parse_intervals(r.raw("gray"), r.child("gray"), gray_rate_keys());
  if (r.has("red")) d.ttp = parse_intervals(r.raw("red"), r.child("red"), ttp_keys());
  if (r.has("reward")) d.reward = parse_intervals(r.raw("reward"), r.child("reward"), reward_keys());
  if (r.has("red_variant")) {
    ObjectReader m(r.raw("red_variant"), r.child("red_variant"));
    double f = 0.0, dec = 0.0;
    m.read("faithful", f);
    m.read("deceptive", dec);
    m.finish();
    d.variant_mix = {f, dec};
  }
  r.finish();
  d.validate();
  return d;
}

inline Curriculum parse_curriculum(const Json& j, const std::string& path, const ScenarioConfig& base) {
  Curriculum c;
  ObjectReader r(j, path);
  r.read("window", c.window);
  if (!r.has("stages")) throw ConfigError(r.child("stages") + " is required");
  const Json& stages = r.raw("stages");
  if (!stages.is_array()) throw ConfigError(r.child("stages") + " must be an array");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string sp = r.child("stages") + "[" + std::to_string(i) + "]";
    ObjectReader s(stages[i], sp);
    CurriculumStage stage;
    stage.distribution = s.has("distribution") ? parse_distribution(s.raw("distribution"), s.child("distribution"), base)
                                               : EnvironmentDistribution::point_mass(base);
    s.read("threshold", stage.threshold);
    s.finish();
    c.stages.push_back(std::move(stage));
  }
  r.finish();
  c.validate();
  return c;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  detail::ObjectReader r(j, "");
  r.read("seed", c.seed);
  if (r.has("scenario")) c.scenario = detail::parse_scenario(r.raw("scenario"), "scenario");
  if (r.has("train")) c.train = detail::parse_train(r.raw("train"), "train");
  if (r.has("distribution")) c.distribution = detail::parse_distribution(r.raw("distribution"), "distribution", c.scenario);
  if (r.has("curriculum")) c.curriculum = detail::parse_curriculum(r.raw("curriculum"), "curriculum", c.scenario);
  r.finish();
  c.scenario.validate();
  return c;
}

inline Json to_json(const ScenarioConfig& s) {
  Json services = Json::array();
  for (Service v : s.network.services) services.push_back(std::string(kServiceNames[static_cast<std::size_t>(v)]));
  Json network{{"hosts", s.network.hosts},
               {"services", services},
               {"service_rate", s.network.service_rate},
               {"decoys", s.network.decoys},
               {"jewel_host", s.network.jewel_host ? Json(*s.network.jewel_host) : Json(nullptr)}};
  Json gray = Json::object();
  GrayProfile g = s.gray;
  for (const auto& k : gray_rate_keys()) gray[k] = detail::gray_field(g, k);
  Json red{{"variant", std::string(to_string(s.variant))}, {"k", s.red.k}};
  TTPParams t = s.red;
  for (const auto& k : ttp_keys()) red[k] = detail::ttp_field(t, k);
  Json reward = Json::object();
  RewardConfig w = s.reward;
  for (const auto& k : reward_keys()) reward[k] = detail::reward_field(w, k);
  return {{"network", network}, {"gray", gray}, {"red", red}, {"reward", reward}, {"horizon", s.horizon}};
}

/// Applies "KEY=VAL". A bare key addresses train.KEY; a dotted key is a path
/// from the document root. VAL is parsed as JSON, falling back to a string.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like KEY=VAL");
  std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  if (key.find('.') == std::string::npos) key = "train." + key;
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (node->is_null()) *node = Json::object();
    if (!node->is_object()) throw ConfigError("override key '" + key + "' walks into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config file '" + path + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct LoadedConfig {
  std::string text;
  /// Document after overrides.
  Json document;
  ExperimentConfig config;
};

inline LoadedConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  LoadedConfig out;
  out.text = read_file(path);
  out.document = Json::parse(out.text, nullptr, false);
  if (out.document.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  for (const auto& o : overrides) apply_override(out.document, o);
  out.config = parse_config(out.document);
  return out;
}

/// Curriculum if present, else distribution, else the fixed scenario.
inline EnvFactory make_factory(const ExperimentConfig& c) {
  if (c.curriculum) return EnvFactory::from_curriculum(*c.curriculum);
  if (c.distribution) return EnvFactory::from_distribution(*c.distribution);
  return EnvFactory::point_mass(c.scenario);
}

}  // namespace netenv
