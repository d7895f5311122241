#pragma once

// Ground-truth network state: hosts grouped into real or honey subnets with
// complete connectivity inside each subnet, plus the per-step event window
// that blue sensors see.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "netenv/error.hpp"
#include "netenv/rng.hpp"

namespace netenv {

using HostId = std::size_t;
using SubnetId = std::size_t;

enum class Service : std::uint8_t { scp, http, amq, ssh };
inline constexpr std::array<std::string_view, 4> kServiceNames{"scp", "http", "amq", "ssh"};

/// Set of service tags, stored as a bitmask.
class ServiceSet {
 public:
  constexpr ServiceSet() = default;
  constexpr ServiceSet(std::initializer_list<Service> services) {
    for (auto s : services) insert(s);
  }
  constexpr void insert(Service s) noexcept { bits_ |= bit(s); }
  constexpr bool contains(Service s) const noexcept { return (bits_ & bit(s)) != 0; }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr std::uint8_t bits() const noexcept { return bits_; }
  friend constexpr bool operator==(ServiceSet, ServiceSet) = default;

  std::vector<Service> list() const {
    std::vector<Service> out;
    for (std::size_t i = 0; i < kServiceNames.size(); ++i) {
      if (contains(static_cast<Service>(i))) out.push_back(static_cast<Service>(i));
    }
    return out;
  }

 private:
  static constexpr std::uint8_t bit(Service s) noexcept { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(s)); }
  std::uint8_t bits_ = 0;
};

inline std::optional<Service> parse_service(std::string_view name) {
  for (std::size_t i = 0; i < kServiceNames.size(); ++i) {
    if (kServiceNames[i] == name) return static_cast<Service>(i);
  }
  return std::nullopt;
}

/// The eleven observable event categories. Order is the observation feature order.
enum class EventKind : std::uint8_t {
  scp,
  http,
  amq,
  ssh,
  recon_quiet,
  recon_aggressive,
  scp_failure,
  rest_failure,
  amqp_failure,
  ssh_failure,
  content_search,
};
inline constexpr std::size_t kEventKinds = 11;
inline constexpr std::array<std::string_view, kEventKinds> kEventKindNames{
    "scp",         "http",         "amq",          "ssh",         "recon_quiet",   "recon_aggressive",
    "scp_failure", "rest_failure", "amqp_failure", "ssh_failure", "content_search"};

inline std::string_view to_string(EventKind k) { return kEventKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kEventKinds; ++i) {
    if (kEventKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

struct Event {
  EventKind kind;
  HostId origin_host;
  std::optional<HostId> target_host;
  std::size_t step;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Host {
  HostId id = 0;
  std::optional<SubnetId> subnet_id;  // empty once isolated
  ServiceSet services;
  bool holds_crown_jewel = false;
  bool is_decoy_jewel = false;
  bool compromised = false;
  bool isolated = false;

  friend bool operator==(const Host&, const Host&) = default;
};

enum class SubnetKind : std::uint8_t { real, honey };

struct Subnet {
  SubnetId id = 0;
  SubnetKind kind = SubnetKind::real;
  std::set<HostId> member_hosts;

  friend bool operator==(const Subnet&, const Subnet&) = default;
};

using Edge = std::pair<HostId, HostId>;  // first < second

inline Edge make_edge(HostId a, HostId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct NetworkConfig {
  std::size_t hosts = 10;
  std::vector<Service> services{Service::scp, Service::http, Service::amq, Service::ssh};
  /// Probability that a host runs each configured service.
  double service_rate = 1.0;
  /// Decoy hosts added to every honey subnet.
  std::size_t decoys = 2;
  /// Real crown-jewel host; drawn uniformly when empty.
  std::optional<HostId> jewel_host;

  void validate() const {
    if (hosts < 2) throw ConfigError("network.hosts must be at least 2");
    if (services.empty()) throw ConfigError("network.services must not be empty");
    if (!(service_rate > 0.0 && service_rate <= 1.0)) throw ConfigError("network.service_rate must be in (0, 1]");
    if (decoys < 1) throw ConfigError("network.decoys must be at least 1");
    if (jewel_host && *jewel_host >= hosts) throw ConfigError("network.jewel_host out of range");
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct NetworkState {
  std::vector<Host> hosts;
  std::vector<Subnet> subnets;
  std::set<Edge> edges;
  std::size_t step_counter = 0;
  /// Events seen by production sensors during the current step window.
  std::vector<Event> event_log;
  /// Events emitted inside honey subnets during the current step window.
  std::vector<Event> honey_log;
  /// Hosts present at build time; decoys are numbered after them.
  std::size_t real_host_count = 0;
  std::size_t decoys_per_honey = 2;

  friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

enum class ActionStatus { applied, invalid };

struct ActionResult {
  NetworkState state;
  ActionStatus status = ActionStatus::applied;

  bool applied() const noexcept { return status == ActionStatus::applied; }
};

namespace detail {

inline void check_host(const NetworkState& s, HostId h) {
  if (h >= s.hosts.size()) throw DomainError("unknown host id " + std::to_string(h));
}

inline void detach(NetworkState& s, HostId h) {
  for (auto it = s.edges.begin(); it != s.edges.end();) {
    it = (it->first == h || it->second == h) ? s.edges.erase(it) : std::next(it);
  }
  if (auto& sub = s.hosts[h].subnet_id) {
    s.subnets[*sub].member_hosts.erase(h);
    sub.reset();
  }
}

inline void attach(NetworkState& s, HostId h, SubnetId subnet) {
  auto& members = s.subnets[subnet].member_hosts;
  for (HostId m : members) s.edges.insert(make_edge(h, m));
  members.insert(h);
  s.hosts[h].subnet_id = subnet;
}

inline SubnetId add_subnet(NetworkState& s, SubnetKind kind) {
  const SubnetId id = s.subnets.size();
  s.subnets.push_back({id, kind, {}});
  return id;
}

}  // namespace detail

/// Fresh network: all hosts in one real subnet, complete graph, one crown jewel.
inline NetworkState build_network(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(mix_seed(seed, 0x6e6574));
  NetworkState s;
  s.real_host_count = config.hosts;
  s.decoys_per_honey = config.decoys;
  const SubnetId subnet = detail::add_subnet(s, SubnetKind::real);
  for (HostId h = 0; h < config.hosts; ++h) {
    Host host;
    host.id = h;
    for (Service svc : config.services) {
      if (rng.bernoulli(config.service_rate)) host.services.insert(svc);
    }
    if (host.services.empty()) host.services.insert(config.services[rng.below(config.services.size())]);
    s.hosts.push_back(host);
    detail::attach(s, h, subnet);
  }
  const HostId jewel = config.jewel_host ? *config.jewel_host : rng.below(config.hosts);
  s.hosts[jewel].holds_crown_jewel = true;
  return s;
}

/// Cuts every edge of `h` and removes it from its subnet. Idempotent.
inline NetworkState isolate_host(NetworkState state, HostId h) {
  detail::check_host(state, h);
  detail::detach(state, h);
  state.hosts[h].isolated = true;
  return state;
}

/// Moves `h` to the smallest other real subnet (ties to the lowest id),
/// creating an empty real subnet first if no other exists.
inline ActionResult migrate_existing(NetworkState state, HostId h) {
  detail::check_host(state, h);
  if (state.hosts[h].isolated) return {std::move(state), ActionStatus::invalid};
  const auto current = state.hosts[h].subnet_id;
  std::optional<SubnetId> best;
  for (const auto& sub : state.subnets) {
    if (sub.kind != SubnetKind::real || sub.id == current) continue;
    if (!best || sub.member_hosts.size() < state.subnets[*best].member_hosts.size()) best = sub.id;
  }
  if (!best) best = detail::add_subnet(state, SubnetKind::real);
  detail::detach(state, h);
  detail::attach(state, h, *best);
  return {std::move(state), ActionStatus::applied};
}

/// Moves `h` into a new honey subnet populated with decoys, one of which
/// carries a decoy crown jewel. Decoys copy the service tags of real hosts.
inline ActionResult migrate_honey(NetworkState state, HostId h) {
  detail::check_host(state, h);
  if (state.hosts[h].isolated) return {std::move(state), ActionStatus::invalid};
  std::size_t honey_count = 0;
  for (const auto& sub : state.subnets) honey_count += sub.kind == SubnetKind::honey ? 1 : 0;

  const SubnetId honey = detail::add_subnet(state, SubnetKind::honey);
  detail::detach(state, h);
  detail::attach(state, h, honey);
  const std::size_t n_real = state.real_host_count;
  const std::size_t d = state.decoys_per_honey;
  const std::size_t jewel_slot = (h + honey_count) % d;
  for (std::size_t j = 0; j < d; ++j) {
    Host decoy;
    decoy.id = state.hosts.size();
    decoy.services = state.hosts[(h + 1 + j) % n_real].services;
    if (j == jewel_slot) {
      decoy.holds_crown_jewel = true;
      decoy.is_decoy_jewel = true;
    }
    state.hosts.push_back(decoy);
    detail::attach(state, decoy.id, honey);
  }
  return {std::move(state), ActionStatus::applied};
}

inline std::size_t degree(const NetworkState& s, HostId h) {
  return static_cast<std::size_t>(
      std::count_if(s.edges.begin(), s.edges.end(), [h](const Edge& e) { return e.first == h || e.second == h; }));
}

/// Hosts sharing an edge with `h`, ascending.
inline std::vector<HostId> neighbors(const NetworkState& s, HostId h) {
  std::vector<HostId> out;
  if (const auto& sub = s.hosts.at(h).subnet_id) {
    for (HostId m : s.subnets[*sub].member_hosts) {
      if (m != h) out.push_back(m);
    }
  }
  return out;
}

inline bool in_honey(const NetworkState& s, HostId h) {
  const auto& sub = s.hosts.at(h).subnet_id;
  return sub && s.subnets[*sub].kind == SubnetKind::honey;
}

/// Appends to the sensor window, or to the honey log when the origin host sits
/// in a honey subnet.
inline void record_event(NetworkState& s, Event e) {
  e.step = s.step_counter;
  (in_honey(s, e.origin_host) ? s.honey_log : s.event_log).push_back(e);
}

inline void clear_window(NetworkState& s) {
  s.event_log.clear();
  s.honey_log.clear();
}

/// What the attacker can see: discovered hosts, their services, and edges
/// among them. Subnet kinds and jewel flags are not part of the view.
struct RedView {
  struct HostEntry {
    HostId id;
    ServiceSet services;
  };
  std::vector<HostEntry> hosts;
  std::vector<Edge> edges;

  bool contains(HostId h) const {
    return std::any_of(hosts.begin(), hosts.end(), [h](const HostEntry& e) { return e.id == h; });
  }
  bool adjacent(HostId a, HostId b) const {
    return std::binary_search(edges.begin(), edges.end(), make_edge(a, b));
  }
  const HostEntry* find(HostId h) const {
    auto it = std::find_if(hosts.begin(), hosts.end(), [h](const HostEntry& e) { return e.id == h; });
    return it == hosts.end() ? nullptr : &*it;
  }
};

inline RedView red_view(const NetworkState& s, const std::set<HostId>& discovered) {
  RedView view;
  for (HostId h : discovered) {
    detail::check_host(s, h);
    view.hosts.push_back({h, s.hosts[h].services});
  }
  for (const auto& e : s.edges) {
    if (discovered.count(e.first) && discovered.count(e.second)) view.edges.push_back(e);
  }
  return view;
}

/// What a live foothold reveals locally: its subnet peers (the result of a
/// scan) and whether the host's own files contain a jewel. Decoy and real
/// jewels are indistinguishable here.
struct Foothold {
  HostId host;
  std::vector<HostId> peers;
  bool holds_jewel;
};

/// Local information for each non-isolated host in `controlled`.
inline std::vector<Foothold> foothold_view(const NetworkState& s, const std::set<HostId>& controlled) {
  std::vector<Foothold> out;
  for (HostId h : controlled) {
    detail::check_host(s, h);
    if (s.hosts[h].isolated) continue;
    out.push_back({h, neighbors(s, h), s.hosts[h].holds_crown_jewel});
  }
  return out;
}

/// Structural invariant violations, empty when the state is consistent.
inline std::vector<std::string> check_invariants(const NetworkState& s) {
  std::vector<std::string> bad;
  const std::size_t n = s.hosts.size();
  std::size_t real_jewels = 0, decoy_jewels = 0, honey_subnets = 0;
  std::vector<std::size_t> membership(n, 0), deg(n, 0), inside(s.subnets.size(), 0);

  for (const auto& sub : s.subnets) {
    honey_subnets += sub.kind == SubnetKind::honey ? 1 : 0;
    for (HostId m : sub.member_hosts) {
      if (m >= n) {
        bad.push_back("subnet " + std::to_string(sub.id) + " lists unknown host");
        continue;
      }
      ++membership[m];
      if (s.hosts[m].subnet_id != sub.id) bad.push_back("host " + std::to_string(m) + " subnet mismatch");
    }
  }
  for (const auto& [a, b] : s.edges) {
    if (a >= n || b >= n || a >= b) {
      bad.push_back("malformed edge");
      continue;
    }
    ++deg[a];
    ++deg[b];
    if (!s.hosts[a].subnet_id || s.hosts[a].subnet_id != s.hosts[b].subnet_id) {
      bad.push_back("edge " + std::to_string(a) + "-" + std::to_string(b) + " crosses subnets");
    } else {
      ++inside[*s.hosts[a].subnet_id];
    }
  }
  for (const auto& h : s.hosts) {
    if (h.holds_crown_jewel && !h.is_decoy_jewel) ++real_jewels;
    if (h.is_decoy_jewel) {
      ++decoy_jewels;
      if (!in_honey(s, h.id)) bad.push_back("decoy jewel on host " + std::to_string(h.id) + " outside a honey subnet");
    }
    if (h.isolated && membership[h.id] != 0) bad.push_back("isolated host " + std::to_string(h.id) + " still in a subnet");
    if (!h.isolated && membership[h.id] != 1) bad.push_back("host " + std::to_string(h.id) + " not in exactly one subnet");
    if (h.isolated && deg[h.id] != 0) bad.push_back("isolated host " + std::to_string(h.id) + " has edges");
  }
  if (real_jewels != 1) bad.push_back("expected exactly one real crown jewel");
  if (decoy_jewels != honey_subnets) bad.push_back("decoy jewel count differs from honey subnet count");
  for (const auto& sub : s.subnets) {
    const std::size_t k = sub.member_hosts.size();
    if (inside[sub.id] != (k == 0 ? 0 : k * (k - 1) / 2)) {
      bad.push_back("subnet " + std::to_string(sub.id) + " is not fully connected");
    }
  }
  for (const auto& e : s.event_log) {
    if (e.step != s.step_counter) bad.push_back("event stamped with a stale step");
  }
  return bad;
}

}  // namespace netenv
