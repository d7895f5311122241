#pragma once

// Distributions over network environments and curricula built from them.
// Discrete parameters (host count, red variant) are drawn through a
// generative program; interval parameters are drawn uniformly from the same
// seeded stream.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "netenv/agents.hpp"
#include "netenv/error.hpp"
#include "netenv/genprog.hpp"
#include "netenv/rng.hpp"
#include "netenv/scenario.hpp"

namespace netenv {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline const std::vector<std::string>& gray_rate_keys() {
  static const std::vector<std::string> keys{"p_http",      "p_amq",        "p_ssh",      "p_scp",
                                             "p_rest_fail", "p_amqp_fail", "p_ssh_fail", "p_scp_fail"};
  return keys;
}
inline const std::vector<std::string>& ttp_keys() {
  static const std::vector<std::string> keys{"p_aggr", "p_lateral", "p_find", "deception_rate"};
  return keys;
}
inline const std::vector<std::string>& reward_keys() {
  static const std::vector<std::string> keys{"r_trap_fake_exfil", "r_real_exfil", "c_isolate_benign",
                                             "c_migrate_benign",  "c_action",     "r_isolate_red"};
  return keys;
}

namespace detail {

inline double& gray_field(GrayProfile& g, const std::string& key) {
  if (key == "p_http") return g.p_http;
  if (key == "p_amq") return g.p_amq;
  if (key == "p_ssh") return g.p_ssh;
  if (key == "p_scp") return g.p_scp;
  if (key == "p_rest_fail") return g.p_rest_fail;
  if (key == "p_amqp_fail") return g.p_amqp_fail;
  if (key == "p_ssh_fail") return g.p_ssh_fail;
  if (key == "p_scp_fail") return g.p_scp_fail;
  throw ConfigError("unknown gray rate '" + key + "'");
}

inline double& ttp_field(TTPParams& t, const std::string& key) {
  if (key == "p_aggr") return t.p_aggr;
  if (key == "p_lateral") return t.p_lateral;
  if (key == "p_find") return t.p_find;
  if (key == "deception_rate") return t.deception_rate;
  throw ConfigError("unknown red parameter '" + key + "'");
}

inline double& reward_field(RewardConfig& r, const std::string& key) {
  if (key == "r_trap_fake_exfil") return r.r_trap_fake_exfil;
  if (key == "r_real_exfil") return r.r_real_exfil;
  if (key == "c_isolate_benign") return r.c_isolate_benign;
  if (key == "c_migrate_benign") return r.c_migrate_benign;
  if (key == "c_action") return r.c_action;
  if (key == "r_isolate_red") return r.r_isolate_red;
  throw ConfigError("unknown reward term '" + key + "'");
}

}  // namespace detail

/// A distribution over ScenarioConfigs. Parameters without a range are fixed
/// at the value in `base`.
struct EnvironmentDistribution {
  ScenarioConfig base;
  /// Support of the host count, drawn uniformly. Empty means base.network.hosts.
  std::vector<std::size_t> host_counts;
  std::map<std::string, Interval> gray;
  /// Mixture weights over {faithful, deceptive}.
  std::pair<double, double> variant_mix{1.0, 0.0};
  std::map<std::string, Interval> ttp;
  std::map<std::string, Interval> reward;

  static EnvironmentDistribution point_mass(const ScenarioConfig& config) {
    EnvironmentDistribution d;
    d.base = config;
    d.variant_mix = config.variant == RedVariant::faithful ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
    return d;
  }

  std::vector<std::size_t> host_support() const {
    return host_counts.empty() ? std::vector<std::size_t>{base.network.hosts} : host_counts;
  }

  std::size_t max_hosts() const {
    const auto s = host_support();
    return *std::max_element(s.begin(), s.end());
  }

  void validate() const {
    base.validate();
    for (std::size_t i = 0; i < host_counts.size(); ++i) {
      const std::size_t n = host_counts[i];
      if (std::find(host_counts.begin(), host_counts.begin() + static_cast<std::ptrdiff_t>(i), n) !=
          host_counts.begin() + static_cast<std::ptrdiff_t>(i)) {
        throw ConfigError("distribution.host_count entries must be distinct");
      }
      if (n < 2) throw ConfigError("distribution.host_count support must be >= 2");
      if (base.network.jewel_host && *base.network.jewel_host >= n) {
        throw ConfigError("distribution.host_count support is smaller than network.jewel_host");
      }
    }
    auto check_interval = [](const std::string& name, const Interval& iv, bool probability) {
      if (!(iv.lo <= iv.hi)) throw ConfigError("distribution interval '" + name + "' has lo > hi");
      if (probability && !(iv.lo >= 0.0 && iv.hi <= 1.0)) {
        throw ConfigError("distribution interval '" + name + "' must lie within [0, 1]");
      }
    };
    for (const auto& [k, iv] : gray) {
      GrayProfile g;
      (void)detail::gray_field(g, k);
      check_interval(k, iv, true);
    }
    for (const auto& [k, iv] : ttp) {
      TTPParams t;
      (void)detail::ttp_field(t, k);
      check_interval(k, iv, true);
    }
    for (const auto& [k, iv] : reward) {
      RewardConfig r;
      (void)detail::reward_field(r, k);
      check_interval(k, iv, false);
    }
    const auto [f, d] = variant_mix;
    if (!(f >= 0.0 && d >= 0.0) || std::abs(f + d - 1.0) > genprog::kNormTolerance) {
      throw ConfigError("distribution.red_variant mix must be non-negative and sum to 1");
    }
    // Every corner of the reward box must keep the required ordering.
    RewardConfig lo = base.reward, hi = base.reward;
    for (const auto& [k, iv] : reward) {
      detail::reward_field(lo, k) = iv.lo;
      detail::reward_field(hi, k) = iv.hi;
    }
    if (!(lo.r_isolate_red > 0.0) || !(lo.r_trap_fake_exfil > hi.r_isolate_red)) {
      throw ConfigError("distribution.reward ranges allow r_trap_fake_exfil <= r_isolate_red");
    }
    if (!(hi.r_real_exfil <= 0.0 && hi.c_isolate_benign <= 0.0 && hi.c_migrate_benign <= 0.0 && hi.c_action <= 0.0)) {
      throw ConfigError("distribution.reward ranges allow positive penalties");
    }
  }

  /// Program over the discrete parameters.
  genprog::GenerativeProgram discrete_program() const {
    using genprog::ProgramNode;
    const auto support = host_support();
    std::vector<ProgramNode> nodes;
    std::vector<std::string> branches;
    for (std::size_t n : support) branches.push_back("hosts_" + std::to_string(n));
    nodes.push_back(ProgramNode::choice("host_count?", "host_count", branches));
    for (std::size_t n : support) {
      nodes.push_back(ProgramNode::emit("hosts_" + std::to_string(n), std::to_string(n), "variant?"));
    }
    nodes.push_back(ProgramNode::choice("variant?", "variant", {"faithful", "deceptive"}));
    nodes.push_back(ProgramNode::emit("faithful", "faithful", "halt"));
    nodes.push_back(ProgramNode::emit("deceptive", "deceptive", "halt"));
    nodes.push_back(ProgramNode::halt("halt"));
    genprog::ParamMap params;
    params["host_count"] = std::vector<double>(support.size(), 1.0 / static_cast<double>(support.size()));
    params["variant"] = {variant_mix.first, variant_mix.second};
    return {std::move(nodes), "host_count?", std::move(params)};
  }

  friend bool operator==(const EnvironmentDistribution&, const EnvironmentDistribution&) = default;
};

inline ScenarioConfig sample_env(const EnvironmentDistribution& d, std::uint64_t seed) {
  d.validate();
  Rng rng(mix_seed(seed, 0x656e76));
  const auto trace = genprog::sample_trace(d.discrete_program(), rng, 8);
  ScenarioConfig cfg = d.base;
  cfg.network.hosts = std::stoul(trace.labels.at(0));
  cfg.variant = *parse_red_variant(trace.labels.at(1));
  for (const auto& [k, iv] : d.gray) detail::gray_field(cfg.gray, k) = rng.uniform(iv.lo, iv.hi);
  for (const auto& [k, iv] : d.ttp) detail::ttp_field(cfg.red, k) = rng.uniform(iv.lo, iv.hi);
  for (const auto& [k, iv] : d.reward) detail::reward_field(cfg.reward, k) = rng.uniform(iv.lo, iv.hi);
  cfg.validate();
  return cfg;
}

struct CurriculumStage {
  EnvironmentDistribution distribution;
  /// Mean return over the trailing window needed to leave this stage.
  double threshold = 0.0;

  friend bool operator==(const CurriculumStage&, const CurriculumStage&) = default;
};

struct Curriculum {
  std::vector<CurriculumStage> stages;
  std::size_t window = 100;

  void validate() const {
    if (stages.empty()) throw ConfigError("curriculum has no stages");
    if (window < 1) throw ConfigError("curriculum.window must be at least 1");
    for (const auto& s : stages) {
      if (!std::isfinite(s.threshold)) throw ConfigError("curriculum thresholds must be finite");
      s.distribution.validate();
    }
  }
};

/// Stage index (0-based) reached by replaying `history` (oldest first): a
/// stage is left once the mean of the last `window` returns earned in it
/// reaches its threshold. At most one promotion per episode; the final stage
/// is absorbing.
inline std::size_t advance(const Curriculum& c, const std::vector<double>& history) {
  if (c.stages.empty()) throw ConfigError("curriculum has no stages");
  const std::size_t last = c.stages.size() - 1;
  std::size_t stage = 0;
  std::size_t stage_start = 0;
  double window_sum = 0.0;
  for (std::size_t i = 0; i < history.size() && stage < last; ++i) {
    window_sum += history[i];
    const std::size_t in_stage = i + 1 - stage_start;
    if (in_stage > c.window) window_sum -= history[i - c.window];
    if (in_stage >= c.window && window_sum / static_cast<double>(c.window) >= c.stages[stage].threshold) {
      ++stage;
      stage_start = i + 1;
      window_sum = 0.0;
    }
  }
  return stage;
}

/// Source of per-episode environments for training and evaluation.
struct EnvFactory {
  /// Config for the next episode given its seed and the returns so far.
  std::function<ScenarioConfig(std::uint64_t seed, const std::vector<double>& history)> next;
  /// Largest host count the factory can produce; sizes the learner's input.
  std::size_t max_hosts = 0;
  /// Curriculum stage for a history, when staged.
  std::function<std::size_t(const std::vector<double>& history)> stage = [](const std::vector<double>&) {
    return std::size_t{0};
  };

  static EnvFactory point_mass(const ScenarioConfig& config) {
    config.validate();
    return {[config](std::uint64_t, const std::vector<double>&) { return config; }, config.network.hosts};
  }

  static EnvFactory from_distribution(const EnvironmentDistribution& d) {
    d.validate();
    return {[d](std::uint64_t seed, const std::vector<double>&) { return sample_env(d, seed); }, d.max_hosts()};
  }

  static EnvFactory from_curriculum(const Curriculum& c) {
    c.validate();
    std::size_t max_hosts = 0;
    for (const auto& s : c.stages) max_hosts = std::max(max_hosts, s.distribution.max_hosts());
    EnvFactory f{[c](std::uint64_t seed, const std::vector<double>& history) {
                   return sample_env(c.stages[advance(c, history)].distribution, seed);
                 },
                 max_hosts};
    f.stage = [c](const std::vector<double>& history) { return advance(c, history); };
    return f;
  }
};

}  // namespace netenv
