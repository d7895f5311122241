#pragma once

#include <cstddef>
#include <cstdint>

#include "netenv/agents.hpp"
#include "netenv/error.hpp"
#include "netenv/netmodel.hpp"

namespace netenv {

/// Reward terms. The trap bonus must exceed the isolation bonus, and every
/// cost is non-positive.
struct RewardConfig {
  double r_trap_fake_exfil = 1.0;
  double r_real_exfil = -1.0;
  double c_isolate_benign = -0.1;
  double c_migrate_benign = -0.05;
  double c_action = -0.01;
  double r_isolate_red = 0.5;

  void validate() const {
    if (!(r_isolate_red > 0.0)) throw ConfigError("reward.r_isolate_red must be positive");
    if (!(r_trap_fake_exfil > r_isolate_red)) throw ConfigError("reward.r_trap_fake_exfil must exceed reward.r_isolate_red");
    if (!(r_real_exfil <= 0.0 && c_isolate_benign <= 0.0 && c_migrate_benign <= 0.0 && c_action <= 0.0)) {
      throw ConfigError("reward penalties must be non-positive");
    }
  }

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

/// One concrete network environment.
struct ScenarioConfig {
  NetworkConfig network;
  GrayProfile gray;
  RedVariant variant = RedVariant::faithful;
  TTPParams red;
  RewardConfig reward;
  std::size_t horizon = 100;

  void validate() const {
    network.validate();
    gray.validate();
    red.validate();
    reward.validate();
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
  }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

}  // namespace netenv
