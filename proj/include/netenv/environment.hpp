#pragma once

// The blue agent's POMDP. Each step applies one blue action, lets gray and red
// act, scores the transition, and summarizes the step's sensor window as
// per-host event counts.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "netenv/agents.hpp"
#include "netenv/error.hpp"
#include "netenv/netmodel.hpp"
#include "netenv/rng.hpp"
#include "netenv/scenario.hpp"

namespace netenv {

enum class Verb : std::uint8_t { noop, isolate, migrate_existing, migrate_honey };

/// Flat action code: 0 is no-op; otherwise host = (code-1)/3, verb = (code-1)%3.
struct Action {
  std::size_t code = 0;

  static constexpr std::size_t count(std::size_t hosts) noexcept { return 3 * hosts + 1; }
  static constexpr Action noop() noexcept { return {0}; }
  static constexpr Action make(Verb verb, HostId host) noexcept {
    return verb == Verb::noop ? Action{0} : Action{1 + 3 * host + (static_cast<std::size_t>(verb) - 1)};
  }

  constexpr Verb verb() const noexcept {
    return code == 0 ? Verb::noop : static_cast<Verb>((code - 1) % 3 + 1);
  }
  constexpr HostId host() const noexcept { return code == 0 ? 0 : (code - 1) / 3; }

  friend constexpr bool operator==(Action, Action) = default;
};

/// Per-host event counts for one step window, hosts in id order.
class Observation {
 public:
  Observation() = default;
  explicit Observation(std::size_t hosts) : hosts_(hosts), counts_(hosts * kEventKinds, 0) {}

  static Observation from_events(std::size_t hosts, const std::vector<Event>& window) {
    Observation obs(hosts);
    for (const auto& e : window) {
      if (e.origin_host < hosts) ++obs.counts_[e.origin_host * kEventKinds + static_cast<std::size_t>(e.kind)];
    }
    return obs;
  }

  std::size_t hosts() const noexcept { return hosts_; }
  std::size_t size() const noexcept { return counts_.size(); }
  const std::vector<std::uint32_t>& counts() const noexcept { return counts_; }

  std::uint32_t count(HostId h, EventKind k) const { return counts_.at(h * kEventKinds + static_cast<std::size_t>(k)); }
  std::uint32_t& count(HostId h, EventKind k) { return counts_.at(h * kEventKinds + static_cast<std::size_t>(k)); }

  friend bool operator==(const Observation&, const Observation&) = default;

 private:
  std::size_t hosts_ = 0;
  std::vector<std::uint32_t> counts_;
};

enum class TerminationCause : std::uint8_t { none, real_exfil, fake_exfil, horizon, contained };

inline std::string_view to_string(TerminationCause c) {
  switch (c) {
    case TerminationCause::real_exfil:
      return "real_exfil";
    case TerminationCause::fake_exfil:
      return "fake_exfil";
    case TerminationCause::horizon:
      return "horizon";
    case TerminationCause::contained:
      return "contained";
    default:
      return "none";
  }
}

/// Itemized step reward; `total()` is the only reward the learner sees.
struct RewardBreakdown {
  double fake_exfil = 0.0;
  double real_exfil = 0.0;
  double isolate_red = 0.0;
  double benign = 0.0;
  double action = 0.0;

  double total() const noexcept { return fake_exfil + real_exfil + isolate_red + benign + action; }
};

/// Red is contained when no compromised host keeps a network connection.
inline bool red_contained(const NetworkState& s) {
  return std::none_of(s.hosts.begin(), s.hosts.end(), [](const Host& h) { return h.compromised && !h.isolated; });
}

namespace detail {

struct RewardFacts {
  Verb verb = Verb::noop;
  bool applied = false;
  bool target_compromised = false;
  bool contained_before = false;
  bool contained_after = false;
  std::optional<bool> exfil_was_decoy;
};

inline RewardBreakdown score(const RewardFacts& f, const RewardConfig& cfg) {
  RewardBreakdown r;
  if (f.exfil_was_decoy) {
    if (*f.exfil_was_decoy) {
      r.fake_exfil = cfg.r_trap_fake_exfil;
    } else {
      r.real_exfil = cfg.r_real_exfil;
    }
  }
  if (f.verb == Verb::noop) return r;
  r.action = cfg.c_action;
  if (!f.applied) return r;
  if (!f.target_compromised) {
    r.benign = f.verb == Verb::isolate ? cfg.c_isolate_benign : cfg.c_migrate_benign;
  } else if (f.verb == Verb::isolate && !f.contained_before && f.contained_after) {
    r.isolate_red = cfg.r_isolate_red;
  }
  return r;
}

}  // namespace detail

/// Scores one transition. `before` is the state prior to the blue action,
/// `after_action` the state right after it, and `exfiltrated_from` the host
/// red exfiltrated from this step, if any.
///
/// The isolation bonus is paid when isolating a compromised host leaves red
/// with no live foothold; isolating one of several footholds earns nothing
/// beyond the action cost.
inline RewardBreakdown compute_reward(const NetworkState& before, const NetworkState& after_action, Action a,
                                      ActionStatus status, std::optional<HostId> exfiltrated_from,
                                      const RewardConfig& cfg) {
  detail::RewardFacts f;
  f.verb = a.verb();
  f.applied = status == ActionStatus::applied;
  if (f.verb != Verb::noop) f.target_compromised = before.hosts.at(a.host()).compromised;
  f.contained_before = red_contained(before);
  f.contained_after = red_contained(after_action);
  if (exfiltrated_from) f.exfil_was_decoy = before.hosts.at(*exfiltrated_from).is_decoy_jewel;
  return detail::score(f, cfg);
}

struct StepInfo {
  RedPhase phase = RedPhase::recon;
  /// Most recently captured live red host.
  std::optional<HostId> red_host;
  TerminationCause cause = TerminationCause::none;
  bool action_valid = true;
  /// The sensor window the observation was built from.
  std::vector<Event> window;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  RewardBreakdown terms;
  bool done = false;
  StepInfo info;
};

class Environment {
 public:
  Environment(const ScenarioConfig& config, std::uint64_t seed)
      : config_((config.validate(), config)),
        gray_(config.gray),
        red_agent_(config.red, config.variant == RedVariant::faithful ? 0.0 : config.red.deception_rate),
        gray_rng_(mix_seed(seed, 1)),
        red_rng_(mix_seed(seed, 2)) {
    state_ = build_network(config.network, seed);
    Rng pick(mix_seed(seed, 3));
    std::vector<HostId> candidates;
    for (const auto& h : state_.hosts) {
      if (!h.holds_crown_jewel) candidates.push_back(h.id);
    }
    const HostId entry = candidates[pick.below(candidates.size())];
    red_ = make_red(config.variant, config.red, entry);
    state_.hosts[entry].compromised = true;

    // Pre-step so the first observation already reflects activity.
    auto events = gray_.step(state_, gray_rng_);
    for (auto& e : events) record_event(state_, e);
    run_red();
    initial_ = Observation::from_events(state_.real_host_count, state_.event_log);
    clear_window(state_);
  }

  const Observation& initial_observation() const noexcept { return initial_; }

  StepResult step(Action a) {
    if (done_) throw DomainError("episode already finished");
    if (a.code >= action_count()) throw DomainError("action code " + std::to_string(a.code) + " out of range");
    ++state_.step_counter;

    // 1. blue
    detail::RewardFacts facts;
    facts.verb = a.verb();
    facts.contained_before = red_contained(state_);
    if (facts.verb != Verb::noop) facts.target_compromised = state_.hosts[a.host()].compromised;
    ActionStatus status = ActionStatus::applied;
    switch (a.verb()) {
      case Verb::noop:
        break;
      case Verb::isolate:
        if (state_.hosts[a.host()].isolated) {
          status = ActionStatus::invalid;
        } else {
          state_ = isolate_host(std::move(state_), a.host());
        }
        break;
      case Verb::migrate_existing: {
        auto r = migrate_existing(std::move(state_), a.host());
        state_ = std::move(r.state);
        status = r.status;
        break;
      }
      case Verb::migrate_honey: {
        auto r = migrate_honey(std::move(state_), a.host());
        state_ = std::move(r.state);
        status = r.status;
        break;
      }
    }
    facts.applied = status == ActionStatus::applied;
    facts.contained_after = red_contained(state_);

    // 2. gray, 3. red
    auto events = gray_.step(state_, gray_rng_);
    for (auto& e : events) record_event(state_, e);
    const auto exfil = run_red();
    if (exfil) facts.exfil_was_decoy = state_.hosts[*exfil].is_decoy_jewel;

    // 4. reward
    StepResult result;
    result.terms = detail::score(facts, config_.reward);
    result.reward = result.terms.total();

    // 5. observation
    result.observation = Observation::from_events(state_.real_host_count, state_.event_log);
    result.info.window = state_.event_log;
    clear_window(state_);

    // 6. termination
    if (exfil) {
      cause_ = state_.hosts[*exfil].is_decoy_jewel ? TerminationCause::fake_exfil : TerminationCause::real_exfil;
    } else if (state_.step_counter >= config_.horizon) {
      cause_ = red_contained(state_) ? TerminationCause::contained : TerminationCause::horizon;
    }
    done_ = cause_ != TerminationCause::none;
    result.done = done_;
    result.info.cause = cause_;
    result.info.phase = red_.phase;
    result.info.action_valid = status == ActionStatus::applied;
    result.info.red_host = red_host();
    return result;
  }

  std::size_t observation_size() const noexcept { return state_.real_host_count * kEventKinds; }
  std::size_t action_count() const noexcept { return Action::count(state_.real_host_count); }
  std::size_t host_count() const noexcept { return state_.real_host_count; }

  bool done() const noexcept { return done_; }
  TerminationCause cause() const noexcept { return cause_; }
  const NetworkState& state() const noexcept { return state_; }
  const RedState& red() const noexcept { return red_; }
  const ScenarioConfig& config() const noexcept { return config_; }
  const RedAgent& red_agent() const noexcept { return red_agent_; }

  /// Red choice traces recorded so far (only when enabled).
  const std::vector<std::pair<RedProgram, genprog::Trace>>& red_traces() const noexcept { return traces_; }
  void record_red_traces(bool on) noexcept { record_traces_ = on; }

  std::optional<HostId> red_host() const {
    for (auto it = red_.capture_order.rbegin(); it != red_.capture_order.rend(); ++it) {
      if (!state_.hosts[*it].isolated) return *it;
    }
    return std::nullopt;
  }

 private:
  std::optional<HostId> run_red() {
    if (red_.phase == RedPhase::done) return std::nullopt;
    const RedView view = red_view(state_, red_.discovered);
    const auto footholds = foothold_view(state_, red_.controlled);
    auto r = red_agent_.step(std::move(red_), view, footholds, red_rng_, state_.step_counter);
    red_ = std::move(r.state);
    for (HostId h : red_.controlled) state_.hosts[h].compromised = true;
    for (auto& e : r.events) record_event(state_, e);
    if (record_traces_) {
      for (auto& t : r.traces) traces_.push_back(std::move(t));
    }
    return r.exfiltrated_from;
  }

  ScenarioConfig config_;
  GrayAgent gray_;
  RedAgent red_agent_;
  Rng gray_rng_;
  Rng red_rng_;
  NetworkState state_;
  RedState red_;
  Observation initial_;
  bool done_ = false;
  TerminationCause cause_ = TerminationCause::none;
  bool record_traces_ = false;
  std::vector<std::pair<RedProgram, genprog::Trace>> traces_;
};

/// Builds an environment and returns it with its first observation.
inline std::pair<Environment, Observation> reset(const ScenarioConfig& config, std::uint64_t seed) {
  Environment env(config, seed);
  Observation obs = env.initial_observation();
  return {std::move(env), std::move(obs)};
}

}  // namespace netenv
