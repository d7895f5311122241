#pragma once

// Gray (benign) and red (attacker) behavior. Every stochastic decision either
// agent makes about *what* to do is a choice point of a generative program,
// so their parameters can be refit from recorded traces. Uniform picks among
// hosts (targets, peers) use the same random stream directly.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "netenv/error.hpp"
#include "netenv/genprog.hpp"
#include "netenv/netmodel.hpp"
#include "netenv/rng.hpp"

namespace netenv {

inline constexpr std::size_t kProgramStepLimit = 64;

namespace detail {

inline void check_probability(double p, std::string_view name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be a probability in [0, 1]");
}

inline genprog::ParamMap::value_type coin(std::string name, double p) { return {std::move(name), {p, 1.0 - p}}; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Gray agent

struct GrayProfile {
  double p_http = 0.3;
  double p_amq = 0.2;
  double p_ssh = 0.1;
  double p_scp = 0.05;
  double p_rest_fail = 0.02;
  double p_amqp_fail = 0.02;
  double p_ssh_fail = 0.02;
  double p_scp_fail = 0.01;

  void validate() const {
    detail::check_probability(p_http, "gray.p_http");
    detail::check_probability(p_amq, "gray.p_amq");
    detail::check_probability(p_ssh, "gray.p_ssh");
    detail::check_probability(p_scp, "gray.p_scp");
    detail::check_probability(p_rest_fail, "gray.p_rest_fail");
    detail::check_probability(p_amqp_fail, "gray.p_amqp_fail");
    detail::check_probability(p_ssh_fail, "gray.p_ssh_fail");
    detail::check_probability(p_scp_fail, "gray.p_scp_fail");
  }

  friend bool operator==(const GrayProfile&, const GrayProfile&) = default;
};

/// Per-host benign activity for one step. Service events go to a uniformly
/// chosen same-subnet peer running that service; failures are reported by the
/// host itself and require it to run the failing service.
class GrayAgent {
 public:
  explicit GrayAgent(const GrayProfile& profile) : program_(make_program(profile)) {}

  const genprog::GenerativeProgram& program() const noexcept { return program_; }

  std::vector<Event> step(const NetworkState& state, Rng& rng) const {
    std::vector<Event> out;
    std::vector<HostId> peers;
    for (HostId h = 0; h < state.real_host_count; ++h) {
      const Host& host = state.hosts[h];
      if (host.isolated) continue;
      const auto trace = genprog::sample_trace(program_, rng, kProgramStepLimit);
      for (const auto& label : trace.labels) {
        const EventKind kind = *parse_event_kind(label);
        const Service svc = service_of(kind);
        if (is_failure(kind)) {
          if (host.services.contains(svc)) out.push_back({kind, h, std::nullopt, state.step_counter});
          continue;
        }
        peers.clear();
        for (HostId m : neighbors(state, h)) {
          if (state.hosts[m].services.contains(svc)) peers.push_back(m);
        }
        if (peers.empty()) continue;
        out.push_back({kind, h, peers[rng.below(peers.size())], state.step_counter});
      }
    }
    return out;
  }

  static bool is_failure(EventKind k) {
    return k == EventKind::scp_failure || k == EventKind::rest_failure || k == EventKind::amqp_failure ||
           k == EventKind::ssh_failure;
  }

  static Service service_of(EventKind k) {
    switch (k) {
      case EventKind::scp:
      case EventKind::scp_failure:
        return Service::scp;
      case EventKind::http:
      case EventKind::rest_failure:
        return Service::http;
      case EventKind::amq:
      case EventKind::amqp_failure:
        return Service::amq;
      default:
        return Service::ssh;
    }
  }

 private:
  static genprog::GenerativeProgram make_program(const GrayProfile& g) {
    g.validate();
    const std::array<std::pair<EventKind, double>, 8> rates{{
        {EventKind::http, g.p_http},
        {EventKind::amq, g.p_amq},
        {EventKind::ssh, g.p_ssh},
        {EventKind::scp, g.p_scp},
        {EventKind::rest_failure, g.p_rest_fail},
        {EventKind::amqp_failure, g.p_amqp_fail},
        {EventKind::ssh_failure, g.p_ssh_fail},
        {EventKind::scp_failure, g.p_scp_fail},
    }};
    std::vector<genprog::ProgramNode> nodes;
    genprog::ParamMap params;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const std::string name(to_string(rates[i].first));
      const std::string next = i + 1 < rates.size() ? "c_" + std::string(to_string(rates[i + 1].first)) : "halt";
      nodes.push_back(genprog::ProgramNode::choice("c_" + name, name, {"e_" + name, next}));
      nodes.push_back(genprog::ProgramNode::emit("e_" + name, name, next));
      params.insert(detail::coin(name, rates[i].second));
    }
    nodes.push_back(genprog::ProgramNode::halt("halt"));
    return {std::move(nodes), "c_http", std::move(params)};
  }

  genprog::GenerativeProgram program_;
};

inline std::vector<Event> gray_step(const GrayProfile& profile, const NetworkState& state, std::uint64_t seed) {
  Rng rng(seed);
  return GrayAgent(profile).step(state, rng);
}

// ---------------------------------------------------------------------------
// Red agent

enum class RedVariant : std::uint8_t { faithful, deceptive };
enum class RedPhase : std::uint8_t { recon, lateral, search, exfil, done };

inline std::string_view to_string(RedVariant v) { return v == RedVariant::faithful ? "faithful" : "deceptive"; }

inline std::optional<RedVariant> parse_red_variant(std::string_view s) {
  if (s == "faithful") return RedVariant::faithful;
  if (s == "deceptive") return RedVariant::deceptive;
  return std::nullopt;
}

inline std::string_view to_string(RedPhase p) {
  constexpr std::array<std::string_view, 5> names{"recon", "lateral", "search", "exfil", "done"};
  return names[static_cast<std::size_t>(p)];
}

struct TTPParams {
  double p_aggr = 0.5;
  double p_lateral = 0.7;
  double p_find = 0.8;
  /// Hosts that must be discovered before leaving recon.
  std::size_t k = 3;
  double deception_rate = 0.5;

  void validate() const {
    detail::check_probability(p_aggr, "red.p_aggr");
    detail::check_probability(p_lateral, "red.p_lateral");
    detail::check_probability(p_find, "red.p_find");
    detail::check_probability(deception_rate, "red.deception_rate");
    if (k < 1) throw ConfigError("red.k must be at least 1");
  }

  friend bool operator==(const TTPParams&, const TTPParams&) = default;
};

struct RedState {
  RedPhase phase = RedPhase::recon;
  std::set<HostId> controlled;
  std::set<HostId> discovered;
  std::optional<HostId> jewel_located;
  double deception_rate = 0.0;
  std::size_t k = 3;
  /// Controlled hosts in order of capture; the last live one is the foothold.
  std::vector<HostId> capture_order;
  /// Controlled hosts already searched since the last sweep reset.
  std::set<HostId> searched;

  friend bool operator==(const RedState&, const RedState&) = default;
};

inline RedState make_red(RedVariant variant, const TTPParams& params, HostId entry_host) {
  params.validate();
  RedState red;
  red.deception_rate = variant == RedVariant::faithful ? 0.0 : params.deception_rate;
  red.k = params.k;
  red.controlled = {entry_host};
  red.discovered = {entry_host};
  red.capture_order = {entry_host};
  return red;
}

/// Which red program produced a trace.
enum class RedProgram : std::uint8_t { deceive, recon, lateral, search };

struct RedStepResult {
  RedState state;
  std::vector<Event> events;
  std::vector<std::pair<RedProgram, genprog::Trace>> traces;
  /// Host the jewel (real or decoy) was exfiltrated from this step.
  std::optional<HostId> exfiltrated_from;
};

/// Recon -> lateral movement -> content search -> exfiltration, acting only on
/// its RedView plus what its live footholds reveal locally.
class RedAgent {
 public:
  explicit RedAgent(const TTPParams& params, double deception_rate) : params_(params) {
    params_.validate();
    detail::check_probability(deception_rate, "red.deception_rate");
    using genprog::ProgramNode;
    deceive_ = genprog::GenerativeProgram(
        {ProgramNode::choice("deceive?", "deceive", {"kind?", "proceed"}),
         ProgramNode::choice("kind?", "gray_kind", {"http", "amq"}), ProgramNode::emit("http", "http", "halt"),
         ProgramNode::emit("amq", "amq", "halt"), ProgramNode::halt("proceed"), ProgramNode::halt("halt")},
        "deceive?", {detail::coin("deceive", deception_rate), detail::coin("gray_kind", 0.5)});
    recon_ = genprog::GenerativeProgram(
        {ProgramNode::choice("aggressive?", "aggressive", {"loud", "quiet"}),
         ProgramNode::emit("loud", "recon_aggressive", "halt"), ProgramNode::emit("quiet", "recon_quiet", "halt"),
         ProgramNode::halt("halt")},
        "aggressive?", {detail::coin("aggressive", params.p_aggr)});
    lateral_ = genprog::GenerativeProgram(
        {ProgramNode::choice("success?", "lateral_success", {"ok", "fail"}), ProgramNode::emit("ok", "ssh", "halt"),
         ProgramNode::emit("fail", "ssh_failure", "halt"), ProgramNode::halt("halt")},
        "success?", {detail::coin("lateral_success", params.p_lateral)});
    search_ = genprog::GenerativeProgram(
        {ProgramNode::choice("find?", "find", {"found", "missed"}), ProgramNode::emit("found", "found", "halt"),
         ProgramNode::emit("missed", "missed", "halt"), ProgramNode::halt("halt")},
        "find?", {detail::coin("find", params.p_find)});
  }

  const genprog::GenerativeProgram& program(RedProgram which) const {
    switch (which) {
      case RedProgram::deceive:
        return *deceive_;
      case RedProgram::recon:
        return *recon_;
      case RedProgram::lateral:
        return *lateral_;
      default:
        return *search_;
    }
  }

  RedStepResult step(RedState red, const RedView& view, const std::vector<Foothold>& footholds, Rng& rng,
                     std::size_t step_index = 0) const {
    if (red.phase == RedPhase::done) throw DomainError("red agent already finished");
    RedStepResult out;
    auto emit = [&](EventKind kind, HostId origin, std::optional<HostId> target) {
      out.events.push_back({kind, origin, target, step_index});
    };
    auto run = [&](RedProgram which) -> const genprog::Trace& {
      out.traces.emplace_back(which, genprog::sample_trace(program(which), rng, kProgramStepLimit));
      return out.traces.back().second;
    };

    // Live footholds, most recently captured first.
    std::vector<const Foothold*> live;
    for (auto it = red.capture_order.rbegin(); it != red.capture_order.rend(); ++it) {
      auto f = std::find_if(footholds.begin(), footholds.end(), [h = *it](const Foothold& x) { return x.host == h; });
      if (f != footholds.end()) live.push_back(&*f);
    }
    if (live.empty()) {
      out.state = std::move(red);
      return out;
    }
    const Foothold& primary = *live.front();

    if (red.deception_rate > 0.0) {
      const auto& t = run(RedProgram::deceive);
      if (!t.labels.empty()) {
        std::vector<HostId> peers;
        for (HostId p : primary.peers) {
          if (view.contains(p) && view.adjacent(primary.host, p)) peers.push_back(p);
        }
        const auto kind = t.labels.front() == "http" ? EventKind::http : EventKind::amq;
        emit(kind, primary.host, peers.empty() ? std::nullopt : std::optional<HostId>(peers[rng.below(peers.size())]));
        out.state = std::move(red);
        return out;
      }
    }

    auto undiscovered_peers = [&](const Foothold& f) {
      std::vector<HostId> v;
      for (HostId p : f.peers) {
        if (!red.discovered.count(p)) v.push_back(p);
      }
      return v;
    };

    auto recon = [&] {
      const Foothold* origin = &primary;
      for (const Foothold* f : live) {
        if (!undiscovered_peers(*f).empty()) {
          origin = f;
          break;
        }
      }
      const auto fresh = undiscovered_peers(*origin);
      const bool loud = run(RedProgram::recon).labels.front() == "recon_aggressive";
      if (loud) {
        red.discovered.insert(fresh.begin(), fresh.end());
      } else if (!fresh.empty()) {
        red.discovered.insert(fresh[rng.below(fresh.size())]);
      }
      emit(loud ? EventKind::recon_aggressive : EventKind::recon_quiet, origin->host, std::nullopt);
      const bool exhausted = std::none_of(live.begin(), live.end(),
                                          [&](const Foothold* f) { return !undiscovered_peers(*f).empty(); });
      if (red.discovered.size() >= red.k || exhausted) red.phase = RedPhase::lateral;
    };

    for (int guard = 0; guard < 8; ++guard) {
      switch (red.phase) {
        case RedPhase::recon:
          recon();
          out.state = std::move(red);
          return out;

        case RedPhase::lateral: {
          std::vector<HostId> targets;
          for (const auto& entry : view.hosts) {
            if (red.controlled.count(entry.id)) continue;
            for (const Foothold* f : live) {
              if (view.adjacent(f->host, entry.id)) {
                targets.push_back(entry.id);
                break;
              }
            }
          }
          if (targets.empty()) {
            const bool can_discover = std::any_of(live.begin(), live.end(),
                                                  [&](const Foothold* f) { return !undiscovered_peers(*f).empty(); });
            if (!can_discover && !red.searched.empty()) {
              // Nothing left to reach: sweep the held hosts again.
              red.searched.clear();
              red.phase = RedPhase::search;
            } else {
              red.phase = RedPhase::recon;
            }
            continue;
          }
          const HostId target = targets[rng.below(targets.size())];
          const Foothold* src = *std::find_if(live.begin(), live.end(),
                                              [&](const Foothold* f) { return view.adjacent(f->host, target); });
          if (run(RedProgram::lateral).labels.front() == "ssh") {
            emit(EventKind::ssh, src->host, target);
            red.controlled.insert(target);
            red.capture_order.push_back(target);
            red.phase = RedPhase::search;
          } else {
            // The target's sshd reports the rejected login.
            emit(EventKind::ssh_failure, target, src->host);
          }
          out.state = std::move(red);
          return out;
        }

        case RedPhase::search: {
          // A host captured this step is not yet in `footholds`; it is searched next step.
          const Foothold* next = nullptr;
          for (const Foothold* f : live) {
            if (!red.searched.count(f->host)) {
              next = f;
              break;
            }
          }
          if (next == nullptr) {
            red.phase = RedPhase::lateral;
            continue;
          }
          red.searched.insert(next->host);
          emit(EventKind::content_search, next->host, std::nullopt);
          if (next->holds_jewel && run(RedProgram::search).labels.front() == "found") {
            red.jewel_located = next->host;
            red.phase = RedPhase::exfil;
          }
          out.state = std::move(red);
          return out;
        }

        case RedPhase::exfil: {
          const HostId jewel = *red.jewel_located;
          const bool reachable =
              std::any_of(live.begin(), live.end(), [&](const Foothold* f) { return f->host == jewel && f->holds_jewel; });
          if (!reachable) {
            red.jewel_located.reset();
            red.phase = RedPhase::search;
            continue;
          }
          emit(EventKind::scp, jewel, std::nullopt);
          red.phase = RedPhase::done;
          out.exfiltrated_from = jewel;
          out.state = std::move(red);
          return out;
        }

        case RedPhase::done:
          break;
      }
    }
    // Only reachable if the phase machine cycles without acting; treat as idle.
    out.state = std::move(red);
    return out;
  }

 private:
  TTPParams params_;
  std::optional<genprog::GenerativeProgram> deceive_, recon_, lateral_, search_;
};

inline RedStepResult red_step(const RedState& red, const RedView& view, const std::vector<Foothold>& footholds,
                              const TTPParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return RedAgent(params, red.deception_rate).step(red, view, footholds, rng);
}

}  // namespace netenv
