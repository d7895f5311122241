#include <gtest/gtest.h>

#include <algorithm>

#include "netenv/agents.hpp"

using namespace netenv;

namespace {

NetworkState net(std::size_t hosts, std::optional<HostId> jewel = std::nullopt, std::uint64_t seed = 1) {
  NetworkConfig c;
  c.hosts = hosts;
  c.jewel_host = jewel;
  return build_network(c, seed);
}

GrayProfile silent() {
  GrayProfile g;
  g.p_http = g.p_amq = g.p_ssh = g.p_scp = 0.0;
  g.p_rest_fail = g.p_amqp_fail = g.p_ssh_fail = g.p_scp_fail = 0.0;
  return g;
}

TTPParams certain() {
  TTPParams t;
  t.p_aggr = t.p_lateral = t.p_find = 1.0;
  return t;
}

RedStepResult advance_red(const RedAgent& agent, const RedState& red, const NetworkState& s, Rng& rng) {
  return agent.step(red, red_view(s, red.discovered), foothold_view(s, red.controlled), rng);
}

}  // namespace

TEST(Gray, AllRatesZeroIsSilent) { EXPECT_TRUE(gray_step(silent(), net(10), 3).empty()); }

TEST(Gray, CertainHttpGivesOneEventPerLiveHost) {
  GrayProfile g = silent();
  g.p_http = 1.0;
  const auto s = net(10);
  const auto events = gray_step(g, s, 3);
  ASSERT_EQ(events.size(), 10u);
  for (const auto& e : events) {
    EXPECT_EQ(e.kind, EventKind::http);
    ASSERT_TRUE(e.target_host);
    EXPECT_NE(*e.target_host, e.origin_host);
    EXPECT_TRUE(s.hosts[*e.target_host].services.contains(Service::http));
  }
}

TEST(Gray, HttpRateMeanWithinBinomialBound) {
  GrayProfile g = silent();
  g.p_http = 0.3;
  const auto s = net(10);
  GrayAgent agent(g);
  Rng rng(17);
  double total = 0;
  for (int i = 0; i < 10000; ++i) total += static_cast<double>(agent.step(s, rng).size());
  EXPECT_NEAR(total / 10000.0, 3.0, 0.05);
}

TEST(Gray, IsolatedHostsEmitNothing) {
  GrayProfile g;
  g.p_http = g.p_amq = g.p_ssh = g.p_scp = 1.0;
  g.p_rest_fail = g.p_amqp_fail = g.p_ssh_fail = g.p_scp_fail = 1.0;
  auto s = isolate_host(net(6), 2);
  s = isolate_host(std::move(s), 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& e : gray_step(g, s, seed)) {
      EXPECT_NE(e.origin_host, 2u);
      EXPECT_NE(e.origin_host, 4u);
    }
  }
}

TEST(Gray, DecoysDoNotGenerateTraffic) {
  GrayProfile g = silent();
  g.p_http = 1.0;
  const auto s = migrate_honey(net(5), 0).state;
  for (const auto& e : gray_step(g, s, 9)) EXPECT_LT(e.origin_host, 5u);
}

TEST(Gray, DeterministicInSeed) {
  const auto s = net(10);
  EXPECT_EQ(gray_step(GrayProfile{}, s, 5), gray_step(GrayProfile{}, s, 5));
}

TEST(Gray, RejectsBadRates) {
  GrayProfile g;
  g.p_ssh = 1.5;
  EXPECT_THROW(GrayAgent{g}, ConfigError);
}

TEST(MakeRed, FaithfulHasNoDeception) {
  const auto r = make_red(RedVariant::faithful, TTPParams{}, 4);
  EXPECT_EQ(r.deception_rate, 0.0);
  EXPECT_EQ(r.controlled, std::set<HostId>{4});
  EXPECT_EQ(r.discovered, std::set<HostId>{4});
  EXPECT_EQ(r.phase, RedPhase::recon);
}

TEST(MakeRed, DeceptiveDefaultsToHalf) {
  EXPECT_EQ(make_red(RedVariant::deceptive, TTPParams{}, 0).deception_rate, 0.5);
}

TEST(MakeRed, RejectsBadProbability) {
  TTPParams t;
  t.deception_rate = 1.2;
  EXPECT_THROW(make_red(RedVariant::deceptive, t, 0), ConfigError);
}

TEST(Red, AggressiveReconDiscoversWholeSubnet) {
  const auto s = net(10, 9);
  const auto red = make_red(RedVariant::faithful, certain(), 0);
  const auto r = red_step(red, red_view(s, red.discovered), foothold_view(s, red.controlled), certain(), 1);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, EventKind::recon_aggressive);
  EXPECT_EQ(r.events[0].origin_host, 0u);
  EXPECT_EQ(r.state.discovered.size(), 10u);
  EXPECT_EQ(r.state.phase, RedPhase::lateral);
}

TEST(Red, QuietReconDiscoversOneHost) {
  TTPParams t = certain();
  t.p_aggr = 0.0;
  const auto s = net(10, 9);
  const auto red = make_red(RedVariant::faithful, t, 0);
  const auto r = red_step(red, red_view(s, red.discovered), foothold_view(s, red.controlled), t, 1);
  EXPECT_EQ(r.events.at(0).kind, EventKind::recon_quiet);
  EXPECT_EQ(r.state.discovered.size(), 2u);
  EXPECT_EQ(r.state.phase, RedPhase::recon);
}

TEST(Red, FullDeceptionOnlyEmitsGrayLikeEvents) {
  TTPParams t = certain();
  t.deception_rate = 1.0;
  const auto s = net(10, 9);
  RedAgent agent(t, 1.0);
  auto red = make_red(RedVariant::deceptive, t, 0);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto r = advance_red(agent, red, s, rng);
    ASSERT_EQ(r.events.size(), 1u);
    EXPECT_TRUE(r.events[0].kind == EventKind::http || r.events[0].kind == EventKind::amq);
    EXPECT_EQ(r.state.phase, RedPhase::recon);
    red = r.state;
  }
}

TEST(Red, MinimalExfiltrationChainOnTwoHosts) {
  // Entry 0, jewel on 1, every choice certain: recon, ssh, content_search, scp.
  auto s = net(2, 1);
  RedAgent agent(certain(), 0.0);
  auto red = make_red(RedVariant::faithful, certain(), 0);
  Rng rng(0);
  const std::vector<EventKind> expected{EventKind::recon_aggressive, EventKind::ssh, EventKind::content_search,
                                        EventKind::scp};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    auto r = advance_red(agent, red, s, rng);
    ASSERT_EQ(r.events.size(), 1u) << "step " << i;
    EXPECT_EQ(r.events[0].kind, expected[i]) << "step " << i;
    red = r.state;
    if (i + 1 == expected.size()) {
      EXPECT_EQ(r.exfiltrated_from, HostId{1});
    }
  }
  EXPECT_EQ(red.phase, RedPhase::done);
  EXPECT_EQ(red.controlled, (std::set<HostId>{0, 1}));
  EXPECT_THROW(advance_red(agent, red, s, rng), DomainError);
}

TEST(Red, TrappedRedExfiltratesDecoyJewel) {
  // Red holds host 0 (jewel on 5); blue moves 0 into a honey subnet.
  auto s = net(6, 5);
  s = migrate_honey(std::move(s), 0).state;
  RedAgent agent(certain(), 0.0);
  auto red = make_red(RedVariant::faithful, certain(), 0);
  Rng rng(2);
  std::optional<HostId> exfil;
  for (int i = 0; i < 10 && !exfil; ++i) {
    auto r = advance_red(agent, red, s, rng);
    red = r.state;
    for (HostId h : red.controlled) s.hosts[h].compromised = true;
    exfil = r.exfiltrated_from;
  }
  ASSERT_TRUE(exfil);
  EXPECT_TRUE(s.hosts[*exfil].is_decoy_jewel);
}

TEST(Red, FailedLateralReportsSshFailureAtTarget) {
  TTPParams t = certain();
  t.p_lateral = 0.0;
  auto s = net(2, 1);
  RedAgent agent(t, 0.0);
  auto red = make_red(RedVariant::faithful, t, 0);
  Rng rng(0);
  red = advance_red(agent, red, s, rng).state;
  const auto r = advance_red(agent, red, s, rng);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, EventKind::ssh_failure);
  EXPECT_EQ(r.events[0].origin_host, 1u);
  EXPECT_EQ(r.state.controlled, std::set<HostId>{0});
}

TEST(Red, ContainedRedDoesNothing) {
  auto s = isolate_host(net(4, 3), 0);
  RedAgent agent(certain(), 0.0);
  const auto red = make_red(RedVariant::faithful, certain(), 0);
  Rng rng(0);
  const auto r = advance_red(agent, red, s, rng);
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.state, red);
}

TEST(Red, StaysWithinItsViewAndVocabulary) {
  // Random walks: every red event references discovered hosts only, and
  // controlled stays a subset of discovered.
  Rng world(11);
  for (int ep = 0; ep < 300; ++ep) {
    auto s = net(3 + world.below(8), std::nullopt, ep);
    TTPParams t;
    RedAgent agent(t, ep % 2 ? 0.5 : 0.0);
    auto red = make_red(ep % 2 ? RedVariant::deceptive : RedVariant::faithful, t, 0);
    if (s.hosts[0].holds_crown_jewel) continue;
    Rng rng(ep);
    for (int i = 0; i < 60 && red.phase != RedPhase::done; ++i) {
      const auto before = red.discovered;
      auto r = advance_red(agent, red, s, rng);
      for (const auto& e : r.events) {
        EXPECT_TRUE(before.contains(e.origin_host) || r.state.discovered.contains(e.origin_host));
        if (e.target_host) {
          EXPECT_TRUE(before.contains(*e.target_host));
        }
        if (ep % 2 == 0) {
          EXPECT_TRUE(e.kind != EventKind::http && e.kind != EventKind::amq);
        }
      }
      red = r.state;
      EXPECT_TRUE(std::includes(red.discovered.begin(), red.discovered.end(), red.controlled.begin(),
                                red.controlled.end()));
      for (HostId h : red.controlled) s.hosts[h].compromised = true;
      if (world.below(10) == 0) s = migrate_honey(std::move(s), world.below(s.real_host_count)).state;
    }
  }
}

TEST(Red, ChoiceTracesCarryProgramWeights) {
  TTPParams t;
  RedAgent agent(t, 0.5);
  auto s = net(10, 9);
  auto red = make_red(RedVariant::deceptive, t, 0);
  Rng rng(4);
  for (int i = 0; i < 30 && red.phase != RedPhase::done; ++i) {
    auto r = advance_red(agent, red, s, rng);
    for (const auto& [which, trace] : r.traces) {
      EXPECT_DOUBLE_EQ(trace.weight, genprog::trace_weight(agent.program(which), trace));
    }
    red = r.state;
  }
}
