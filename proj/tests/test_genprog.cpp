#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "netenv/genprog.hpp"

using namespace netenv;
using namespace netenv::genprog;

namespace {

GenerativeProgram halt_only() { return {{ProgramNode::halt("h")}, "h", {}}; }

GenerativeProgram one_choice(double p0) {
  return {{ProgramNode::choice("c", "coin", {"a", "b"}), ProgramNode::emit("a", "heads", "h"),
           ProgramNode::emit("b", "tails", "h"), ProgramNode::halt("h")},
          "c",
          {{"coin", {p0, 1.0 - p0}}}};
}

// c1 -> (x | y) -> c2 -> (u | v) -> halt
GenerativeProgram two_choices(double p1, double p2) {
  return {{ProgramNode::choice("c1", "first", {"x", "y"}), ProgramNode::emit("x", "x", "c2"),
           ProgramNode::emit("y", "y", "c2"), ProgramNode::choice("c2", "second", {"u", "v"}),
           ProgramNode::emit("u", "u", "h"), ProgramNode::emit("v", "v", "h"), ProgramNode::halt("h")},
          "c1",
          {{"first", {p1, 1.0 - p1}}, {"second", {p2, 1.0 - p2}}}};
}

std::size_t choice_steps(const Trace& t) {
  std::size_t n = 0;
  for (const auto& s : t.steps) n += s.branch >= 0;
  return n;
}

}  // namespace

TEST(GenerativeProgram, RejectsMalformedPrograms) {
  EXPECT_THROW(GenerativeProgram({}, "h", {}), ValidationError);
  EXPECT_THROW(GenerativeProgram({ProgramNode::halt("h")}, "missing", {}), ValidationError);
  EXPECT_THROW(GenerativeProgram({ProgramNode::halt("h"), ProgramNode::halt("h")}, "h", {}), ValidationError);
  EXPECT_THROW(GenerativeProgram({ProgramNode::emit("e", "x", "nowhere"), ProgramNode::halt("h")}, "e", {}),
               ValidationError);
  // Probabilities must sum to one.
  EXPECT_THROW(GenerativeProgram({ProgramNode::choice("c", "coin", {"h", "h"}), ProgramNode::halt("h")}, "c",
                                 {{"coin", {0.5, 0.6}}}),
               ValidationError);
  // Branch count must match the vector length.
  EXPECT_THROW(GenerativeProgram({ProgramNode::choice("c", "coin", {"h", "h"}), ProgramNode::halt("h")}, "c",
                                 {{"coin", {1.0}}}),
               ValidationError);
  // Every node must be reachable.
  EXPECT_THROW(GenerativeProgram({ProgramNode::halt("h"), ProgramNode::halt("orphan")}, "h", {}), ValidationError);
}

TEST(SampleTrace, HaltOnlyProgramGivesEmptyTrace) {
  const Trace t = sample_trace(halt_only(), 1, 10);
  EXPECT_TRUE(t.labels.empty());
  EXPECT_EQ(choice_steps(t), 0u);
  EXPECT_DOUBLE_EQ(t.weight, 1.0);
  EXPECT_FALSE(t.truncated);
}

TEST(SampleTrace, FairCoinFrequencyWithinThreeSigma) {
  const auto p = one_choice(0.5);
  Rng rng(42);
  int zeros = 0;
  for (int i = 0; i < 10000; ++i) zeros += sample_trace(p, rng, 10).steps.front().branch == 0;
  EXPECT_NEAR(zeros / 10000.0, 0.5, 0.015);
}

TEST(SampleTrace, DeterministicInSeed) {
  const auto p = two_choices(0.3, 0.6);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Trace a = sample_trace(p, s, 10), b = sample_trace(p, s, 10);
    EXPECT_EQ(a.steps, b.steps);
    EXPECT_EQ(a.labels, b.labels);
  }
}

TEST(SampleTrace, FlagsTruncation) {
  // An emit node that loops back to itself never halts.
  const GenerativeProgram loop({ProgramNode::emit("e", "tick", "e")}, "e", {});
  const Trace t = sample_trace(loop, 0, 5);
  EXPECT_TRUE(t.truncated);
  EXPECT_EQ(t.labels.size(), 5u);
  EXPECT_THROW(sample_trace(loop, 0, 0), DomainError);
}

TEST(SampleTrace, WeightMatchesTraceWeight) {
  const auto p = two_choices(0.5, 0.2);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Trace t = sample_trace(p, s, 10);
    EXPECT_DOUBLE_EQ(t.weight, trace_weight(p, t));
  }
}

TEST(TraceWeight, EmptyTraceOnHaltProgramIsOne) { EXPECT_DOUBLE_EQ(trace_weight(halt_only(), Trace{}), 1.0); }

TEST(TraceWeight, ProductOfBranchProbabilities) {
  const auto p = two_choices(0.5, 0.2);
  Trace t;
  t.steps = {{0, 0}, {1, -1}, {3, 0}, {4, -1}, {6, -1}};
  EXPECT_NEAR(trace_weight(p, t), 0.1, 1e-15);
}

TEST(TraceWeight, NonexistentBranchIsDomainError) {
  const auto p = one_choice(0.5);
  Trace t;
  t.steps = {{0, 2}};
  EXPECT_THROW(trace_weight(p, t), DomainError);
  t.steps = {{7, -1}};
  EXPECT_THROW(trace_weight(p, t), DomainError);
  t.steps = {{1, -1}};  // does not start at the entry
  EXPECT_THROW(trace_weight(p, t), DomainError);
}

TEST(EnumerateTraces, TwoFairChoicesGiveFourQuarterTraces) {
  const auto traces = enumerate_traces(two_choices(0.5, 0.5), 20);
  ASSERT_EQ(traces.size(), 4u);
  double total = 0.0;
  for (const auto& t : traces) {
    EXPECT_DOUBLE_EQ(t.weight, 0.25);
    total += t.weight;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(EnumerateTraces, DegenerateChoiceKeepsZeroWeightTrace) {
  const GenerativeProgram p({ProgramNode::choice("c", "coin", {"h", "h"}), ProgramNode::halt("h")}, "c",
                            {{"coin", {1.0, 0.0}}});
  const auto traces = enumerate_traces(p, 10);
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_DOUBLE_EQ(traces[0].weight, 1.0);
  EXPECT_DOUBLE_EQ(traces[1].weight, 0.0);
}

TEST(EnumerateTraces, HaltOnlyProgramHasOneTrace) {
  const auto traces = enumerate_traces(halt_only(), 10);
  ASSERT_EQ(traces.size(), 1u);
  EXPECT_DOUBLE_EQ(traces[0].weight, 1.0);
}

TEST(EnumerateTraces, CapRaisesResourceError) {
  // 2^12 traces against a cap of 1000.
  std::vector<ProgramNode> nodes;
  ParamMap params;
  for (int i = 0; i < 12; ++i) {
    const std::string next = i == 11 ? "h" : "c" + std::to_string(i + 1);
    nodes.push_back(ProgramNode::choice("c" + std::to_string(i), "cp" + std::to_string(i), {next, next}));
    params["cp" + std::to_string(i)] = {0.5, 0.5};
  }
  nodes.push_back(ProgramNode::halt("h"));
  const GenerativeProgram p(nodes, "c0", params);
  EXPECT_THROW(enumerate_traces(p, 100, 1000), ResourceError);
  EXPECT_EQ(enumerate_traces(p, 100).size(), 4096u);
}

TEST(EnumerateTraces, WeightsAgreeWithTraceWeight) {
  const auto p = two_choices(0.3, 0.85);
  for (const auto& t : enumerate_traces(p, 20)) EXPECT_DOUBLE_EQ(trace_weight(p, t), t.weight);
}

TEST(FitParams, CountRatio) {
  const auto p = one_choice(0.5);
  std::vector<Trace> data;
  for (int i = 0; i < 100; ++i) {
    Trace t;
    t.steps = {{0, i < 70 ? 0 : 1}, {static_cast<std::size_t>(i < 70 ? 1 : 2), -1}, {3, -1}};
    data.push_back(t);
  }
  const auto fitted = fit_params(p, data);
  EXPECT_NEAR(fitted.params().at("coin")[0], 0.7, 1e-12);
  EXPECT_NEAR(fitted.params().at("coin")[1], 0.3, 1e-12);
}

TEST(FitParams, UnvisitedChoicePointKeepsPrior) {
  // "second" is reachable only through branch 1 of "first".
  const GenerativeProgram p({ProgramNode::choice("c1", "first", {"h", "c2"}),
                             ProgramNode::choice("c2", "second", {"h", "h"}), ProgramNode::halt("h")},
                            "c1", {{"first", {0.5, 0.5}}, {"second", {0.25, 0.75}}});
  Trace t;
  t.steps = {{0, 0}, {2, -1}};
  const auto fitted = fit_params(p, {t, t});
  EXPECT_EQ(fitted.params().at("second"), (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(fitted.params().at("first"), (std::vector<double>{1.0, 0.0}));
}

TEST(FitParams, RecoversParamsFromProportionalData) {
  const auto p = two_choices(0.3, 0.6);
  std::vector<Trace> data;
  for (const auto& t : enumerate_traces(p, 20)) {
    const int copies = static_cast<int>(std::lround(t.weight * 1000));
    for (int i = 0; i < copies; ++i) data.push_back(t);
  }
  const auto fitted = fit_params(two_choices(0.5, 0.5), data);
  EXPECT_NEAR(fitted.params().at("first")[0], 0.3, 1e-9);
  EXPECT_NEAR(fitted.params().at("second")[0], 0.6, 1e-9);
}

TEST(FitParams, IdempotentOnItsOwnOutput) {
  const auto p = two_choices(0.5, 0.5);
  std::vector<Trace> data;
  for (std::uint64_t s = 0; s < 37; ++s) data.push_back(sample_trace(two_choices(0.2, 0.9), s, 20));
  const auto once = fit_params(p, data);
  const auto twice = fit_params(once, data);
  EXPECT_EQ(once.params(), twice.params());
}

TEST(FitParams, SmoothingAndErrors) {
  const auto p = one_choice(0.5);
  Trace t;
  t.steps = {{0, 0}, {1, -1}, {3, -1}};
  const auto smoothed = fit_params(p, {t}, {.add_one_smoothing = true});
  EXPECT_NEAR(smoothed.params().at("coin")[0], 2.0 / 3.0, 1e-12);
  EXPECT_THROW(fit_params(p, {}), DomainError);
  Trace bad;
  bad.steps = {{0, 5}};
  try {
    fit_params(p, {t, bad});
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("trace 1"), std::string::npos);
  }
}
