#pragma once

// Generative programs: finite probabilistic state machines whose executions
// are weighted traces. A program is a graph of emit / choice / halt nodes;
// every choice node names a choice point whose probability vector lives in
// the program's parameter map, so several nodes may share one distribution.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "netenv/error.hpp"
#include "netenv/rng.hpp"

namespace netenv::genprog {

using ParamMap = std::map<std::string, std::vector<double>>;

inline constexpr double kNormTolerance = 1e-9;
inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

struct ProgramNode {
  enum class Kind { emit, choice, halt };

  std::string id;
  Kind kind = Kind::halt;
  std::string label;                  // emit only
  std::string next;                   // emit only
  std::string choice_point;           // choice only
  std::vector<std::string> branches;  // choice only

  static ProgramNode emit(std::string id, std::string label, std::string next) {
    return {std::move(id), Kind::emit, std::move(label), std::move(next), {}, {}};
  }
  static ProgramNode choice(std::string id, std::string choice_point, std::vector<std::string> branches) {
    return {std::move(id), Kind::choice, {}, {}, std::move(choice_point), std::move(branches)};
  }
  static ProgramNode halt(std::string id) { return {std::move(id), Kind::halt, {}, {}, {}, {}}; }
};

/// One visited node. `branch` is the taken branch for choice nodes, -1 otherwise.
struct TraceStep {
  std::size_t node = 0;
  int branch = -1;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
  friend auto operator<=>(const TraceStep&, const TraceStep&) = default;
};

struct Trace {
  std::vector<TraceStep> steps;
  std::vector<std::string> labels;
  double weight = 1.0;
  bool truncated = false;

  bool halted() const noexcept { return !truncated; }
};

class GenerativeProgram {
 public:
  GenerativeProgram(std::vector<ProgramNode> nodes, std::string entry, ParamMap params)
      : nodes_(std::move(nodes)), entry_id_(std::move(entry)), params_(std::move(params)) {
    compile();
  }

  const std::vector<ProgramNode>& nodes() const noexcept { return nodes_; }
  const std::string& entry_id() const noexcept { return entry_id_; }
  std::size_t entry() const noexcept { return entry_; }
  const ParamMap& params() const noexcept { return params_; }

  const ProgramNode& node(std::size_t index) const { return nodes_.at(index); }

  std::optional<std::size_t> find(const std::string& id) const {
    if (auto it = index_.find(id); it != index_.end()) return it->second;
    return std::nullopt;
  }

  /// Successor of `node` along `branch` (-1 for emit nodes).
  std::size_t successor(std::size_t node, int branch) const {
    const auto& c = compiled_[node];
    return c.kind == ProgramNode::Kind::emit ? c.next : c.branches[static_cast<std::size_t>(branch)];
  }

  std::size_t branch_count(std::size_t node) const { return compiled_[node].branches.size(); }

  const std::vector<double>& probabilities(std::size_t node) const {
    return probs_[compiled_[node].choice_point];
  }

  std::size_t choice_point_index(std::size_t node) const { return compiled_[node].choice_point; }
  const std::vector<std::string>& choice_points() const noexcept { return choice_points_; }

  /// Same structure, new parameters (validated).
  GenerativeProgram with_params(ParamMap params) const { return GenerativeProgram(nodes_, entry_id_, std::move(params)); }

 private:
  struct Compiled {
    ProgramNode::Kind kind;
    std::size_t next = 0;
    std::size_t choice_point = 0;
    std::vector<std::size_t> branches;
  };

  void compile() {
    if (nodes_.empty()) throw ValidationError("program has no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].id.empty()) throw ValidationError("node " + std::to_string(i) + " has an empty id");
      if (!index_.emplace(nodes_[i].id, i).second) throw ValidationError("duplicate node id '" + nodes_[i].id + "'");
    }
    auto resolve = [&](const std::string& id, const std::string& from) {
      auto it = index_.find(id);
      if (it == index_.end()) throw ValidationError("node '" + from + "' references unknown node '" + id + "'");
      return it->second;
    };
    if (auto it = index_.find(entry_id_); it == index_.end()) {
      throw ValidationError("entry node '" + entry_id_ + "' does not exist");
    } else {
      entry_ = it->second;
    }

    std::map<std::string, std::size_t> cp_index;
    for (const auto& [name, probs] : params_) {
      double sum = 0.0;
      for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("choice point '" + name + "' has an invalid probability");
        sum += p;
      }
      if (probs.empty() || std::abs(sum - 1.0) > kNormTolerance) {
        throw ValidationError("choice point '" + name + "' probabilities do not sum to 1");
      }
      cp_index.emplace(name, choice_points_.size());
      choice_points_.push_back(name);
      probs_.push_back(probs);
    }

    compiled_.reserve(nodes_.size());
    for (const auto& n : nodes_) {
      Compiled c{n.kind, 0, 0, {}};
      switch (n.kind) {
        case ProgramNode::Kind::emit:
          c.next = resolve(n.next, n.id);
          break;
        case ProgramNode::Kind::choice: {
          auto it = cp_index.find(n.choice_point);
          if (it == cp_index.end()) throw ValidationError("choice point '" + n.choice_point + "' has no parameters");
          c.choice_point = it->second;
          if (n.branches.empty()) throw ValidationError("choice node '" + n.id + "' has no branches");
          if (n.branches.size() != probs_[c.choice_point].size()) {
            throw ValidationError("choice node '" + n.id + "' branch count does not match choice point '" + n.choice_point + "'");
          }
          for (const auto& b : n.branches) c.branches.push_back(resolve(b, n.id));
          break;
        }
        case ProgramNode::Kind::halt:
          break;
      }
      compiled_.push_back(std::move(c));
    }

    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::size_t> stack{entry_};
    seen[entry_] = true;
    while (!stack.empty()) {
      const std::size_t n = stack.back();
      stack.pop_back();
      auto visit = [&](std::size_t m) {
        if (!seen[m]) {
          seen[m] = true;
          stack.push_back(m);
        }
      };
      const auto& c = compiled_[n];
      if (c.kind == ProgramNode::Kind::emit) visit(c.next);
      for (std::size_t b : c.branches) visit(b);
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) throw ValidationError("node '" + nodes_[i].id + "' is unreachable from entry");
    }
  }

  std::vector<ProgramNode> nodes_;
  std::string entry_id_;
  ParamMap params_;
  std::size_t entry_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Compiled> compiled_;
  std::vector<std::string> choice_points_;
  std::vector<std::vector<double>> probs_;
};

/// Index of the sampled branch for a probability vector.
inline int draw_branch(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the accumulated mass.
  return last_positive;
}

/// Runs the program once. Traces that hit `max_steps` non-halt nodes before
/// halting are returned with `truncated` set.
inline Trace sample_trace(const GenerativeProgram& p, Rng& rng, std::size_t max_steps) {
  if (max_steps < 1) throw DomainError("max_steps must be at least 1");
  Trace trace;
  std::size_t node = p.entry();
  std::size_t taken = 0;
  for (;;) {
    const auto& n = p.node(node);
    if (n.kind == ProgramNode::Kind::halt) {
      trace.steps.push_back({node, -1});
      return trace;
    }
    if (taken == max_steps) {
      trace.truncated = true;
      return trace;
    }
    ++taken;
    if (n.kind == ProgramNode::Kind::emit) {
      trace.steps.push_back({node, -1});
      trace.labels.push_back(n.label);
      node = p.successor(node, -1);
    } else {
      const auto& probs = p.probabilities(node);
      const int b = draw_branch(probs, rng);
      trace.weight *= probs[static_cast<std::size_t>(b)];
      trace.steps.push_back({node, b});
      node = p.successor(node, b);
    }
  }
}

inline Trace sample_trace(const GenerativeProgram& p, std::uint64_t seed, std::size_t max_steps) {
  Rng rng(seed);
  return sample_trace(p, rng, max_steps);
}

/// Product of branch probabilities along the trace's path. Throws DomainError
/// if the path cannot be produced by `p`.
inline double trace_weight(const GenerativeProgram& p, const Trace& x) {
  double weight = 1.0;
  std::size_t expected = p.entry();
  std::size_t label = 0;
  bool ended = false;
  for (std::size_t i = 0; i < x.steps.size(); ++i) {
    const auto& s = x.steps[i];
    if (ended) throw DomainError("trace continues past a halt node at step " + std::to_string(i));
    if (s.node >= p.nodes().size()) throw DomainError("trace references nonexistent node at step " + std::to_string(i));
    if (s.node != expected) throw DomainError("trace step " + std::to_string(i) + " does not follow the program graph");
    const auto& n = p.node(s.node);
    switch (n.kind) {
      case ProgramNode::Kind::halt:
        if (s.branch != -1) throw DomainError("halt node carries a branch at step " + std::to_string(i));
        ended = true;
        break;
      case ProgramNode::Kind::emit:
        if (s.branch != -1) throw DomainError("emit node carries a branch at step " + std::to_string(i));
        if (!x.labels.empty() && (label >= x.labels.size() || x.labels[label] != n.label)) {
          throw DomainError("trace label mismatch at step " + std::to_string(i));
        }
        ++label;
        expected = p.successor(s.node, -1);
        break;
      case ProgramNode::Kind::choice:
        if (s.branch < 0 || static_cast<std::size_t>(s.branch) >= p.branch_count(s.node)) {
          throw DomainError("trace references nonexistent branch " + std::to_string(s.branch) + " at step " + std::to_string(i));
        }
        weight *= p.probabilities(s.node)[static_cast<std::size_t>(s.branch)];
        expected = p.successor(s.node, s.branch);
        break;
    }
  }
  if (!x.labels.empty() && label != x.labels.size()) throw DomainError("trace has more labels than emit steps");
  return weight;
}

/// Every halting trace within `max_steps`, zero-weight branches included.
inline std::vector<Trace> enumerate_traces(const GenerativeProgram& p, std::size_t max_steps,
                                           std::size_t cap = kDefaultEnumerationCap) {
  std::vector<Trace> out;
  Trace current;
  // Explicit recursion depth is bounded by max_steps.
  auto recurse = [&](auto&& self, std::size_t node, std::size_t taken) -> void {
    const auto& n = p.node(node);
    if (n.kind == ProgramNode::Kind::halt) {
      if (out.size() >= cap) throw ResourceError("trace enumeration exceeded cap of " + std::to_string(cap));
      current.steps.push_back({node, -1});
      out.push_back(current);
      current.steps.pop_back();
      return;
    }
    if (taken == max_steps) return;
    if (n.kind == ProgramNode::Kind::emit) {
      current.steps.push_back({node, -1});
      current.labels.push_back(n.label);
      self(self, p.successor(node, -1), taken + 1);
      current.labels.pop_back();
      current.steps.pop_back();
      return;
    }
    const auto& probs = p.probabilities(node);
    const double saved = current.weight;
    for (std::size_t b = 0; b < probs.size(); ++b) {
      current.steps.push_back({node, static_cast<int>(b)});
      current.weight = saved * probs[b];
      self(self, p.successor(node, static_cast<int>(b)), taken + 1);
      current.steps.pop_back();
    }
    current.weight = saved;
  };
  recurse(recurse, p.entry(), 0);
  return out;
}

struct FitOptions {
  bool add_one_smoothing = false;
};

/// Maximum-likelihood choice-point probabilities from observed traces.
/// Choice points never visited keep their current parameters.
inline GenerativeProgram fit_params(const GenerativeProgram& p, const std::vector<Trace>& data, FitOptions options = {}) {
  if (data.empty()) throw DomainError("fit_params requires at least one trace");
  std::vector<std::vector<double>> counts(p.choice_points().size());
  for (std::size_t cp = 0; cp < counts.size(); ++cp) counts[cp].assign(p.params().at(p.choice_points()[cp]).size(), 0.0);

  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      (void)trace_weight(p, data[i]);
    } catch (const DomainError& e) {
      throw DomainError("trace " + std::to_string(i) + " is not realizable: " + e.what());
    }
    for (const auto& s : data[i].steps) {
      if (s.branch >= 0) counts[p.choice_point_index(s.node)][static_cast<std::size_t>(s.branch)] += 1.0;
    }
  }

  ParamMap fitted = p.params();
  for (std::size_t cp = 0; cp < counts.size(); ++cp) {
    double total = 0.0;
    for (double c : counts[cp]) total += c;
    if (total == 0.0) continue;
    auto& probs = fitted[p.choice_points()[cp]];
    const double k = static_cast<double>(probs.size());
    for (std::size_t b = 0; b < probs.size(); ++b) {
      probs[b] = options.add_one_smoothing ? (counts[cp][b] + 1.0) / (total + k) : counts[cp][b] / total;
    }
  }
  return p.with_params(std::move(fitted));
}

}  // namespace netenv::genprog
