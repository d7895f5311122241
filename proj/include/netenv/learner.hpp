#pragma once

// Blue-agent learners. The DQN here is deliberately small: one hidden ReLU
// layer, uniform experience replay, a periodically synchronized target
// network, and Adam on the squared one-step TD error. Count features are
// sparse, so the first layer is stored column-major and only non-zero inputs
// are touched.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netenv/environment.hpp"
#include "netenv/envdist.hpp"
#include "netenv/error.hpp"
#include "netenv/rng.hpp"

namespace netenv {

/// Counts are fed to the network multiplied by this constant.
inline constexpr double kFeatureScale = 0.1;

/// Sparse input vector: (index, value) pairs with value != 0.
using SparseInput = std::vector<std::pair<std::uint32_t, double>>;

inline SparseInput to_features(const Observation& obs) {
  SparseInput x;
  const auto& c = obs.counts();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] != 0) x.emplace_back(static_cast<std::uint32_t>(i), kFeatureScale * c[i]);
  }
  return x;
}

/// Input -> ReLU hidden layer -> action values.
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(std::size_t inputs, std::size_t hidden, std::size_t outputs)
      : inputs_(inputs), hidden_(hidden), outputs_(outputs), params_(parameter_count(inputs, hidden, outputs), 0.0) {}

  /// PyTorch-style initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static QNetwork random(std::size_t inputs, std::size_t hidden, std::size_t outputs, Rng& rng) {
    QNetwork q(inputs, hidden, outputs);
    const double a1 = 1.0 / std::sqrt(static_cast<double>(inputs));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (std::size_t i = 0; i < q.b2_offset(); ++i) {
      q.params_[i] = rng.uniform(-1.0, 1.0) * (i < q.w2_offset() ? a1 : a2);
    }
    for (std::size_t i = q.b2_offset(); i < q.params_.size(); ++i) q.params_[i] = rng.uniform(-a2, a2);
    return q;
  }

  static constexpr std::size_t parameter_count(std::size_t in, std::size_t hid, std::size_t out) {
    return in * hid + hid + out * hid + out;
  }

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t outputs() const noexcept { return outputs_; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  // Layout: W1 column-major [in][hidden], b1 [hidden], W2 row-major [out][hidden], b2 [out].
  double& w1(std::size_t h, std::size_t i) { return params_[i * hidden_ + h]; }
  double w1(std::size_t h, std::size_t i) const { return params_[i * hidden_ + h]; }
  double& b1(std::size_t h) { return params_[b1_offset() + h]; }
  double b1(std::size_t h) const { return params_[b1_offset() + h]; }
  double& w2(std::size_t o, std::size_t h) { return params_[w2_offset() + o * hidden_ + h]; }
  double w2(std::size_t o, std::size_t h) const { return params_[w2_offset() + o * hidden_ + h]; }
  double& b2(std::size_t o) { return params_[b2_offset() + o]; }
  double b2(std::size_t o) const { return params_[b2_offset() + o]; }

  std::size_t b1_offset() const noexcept { return inputs_ * hidden_; }
  std::size_t w2_offset() const noexcept { return b1_offset() + hidden_; }
  std::size_t b2_offset() const noexcept { return w2_offset() + outputs_ * hidden_; }

  /// Hidden activations (post-ReLU) for a sparse input.
  void hidden_layer(const SparseInput& x, std::vector<double>& h) const {
    h.assign(params_.begin() + static_cast<std::ptrdiff_t>(b1_offset()),
             params_.begin() + static_cast<std::ptrdiff_t>(w2_offset()));
    for (const auto& [i, v] : x) {
      if (i >= inputs_) throw DomainError("feature index exceeds network input size");
      const double* col = &params_[i * hidden_];
      for (std::size_t k = 0; k < hidden_; ++k) h[k] += v * col[k];
    }
    for (auto& a : h) a = a > 0.0 ? a : 0.0;
  }

  double output(const std::vector<double>& h, std::size_t o) const {
    const double* row = &params_[w2_offset() + o * hidden_];
    double s = params_[b2_offset() + o];
    for (std::size_t k = 0; k < hidden_; ++k) s += row[k] * h[k];
    return s;
  }

  std::vector<double> forward(const SparseInput& x) const {
    std::vector<double> h;
    hidden_layer(x, h);
    std::vector<double> q(outputs_);
    for (std::size_t o = 0; o < outputs_; ++o) q[o] = output(h, o);
    return q;
  }

  std::vector<double> forward(const Observation& obs) const {
    if (obs.size() > inputs_) throw DomainError("observation length exceeds network input size");
    return forward(to_features(obs));
  }

  friend bool operator==(const QNetwork&, const QNetwork&) = default;

 private:
  std::size_t inputs_ = 0, hidden_ = 0, outputs_ = 0;
  std::vector<double> params_;
};

struct Transition {
  Observation obs;
  std::size_t action = 0;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
  /// Valid action codes for the transition's environment are [0, action_count).
  std::size_t action_count = 0;
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
    }
    head_ = (head_ + 1) % capacity_;
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_.at(i); }

  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw DomainError("cannot sample an empty replay buffer");
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.below(items_.size());
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> items_;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Fraction of total_steps over which epsilon decays linearly.
  double epsilon_fraction = 0.2;
  std::size_t target_sync = 1000;
  std::size_t batch_size = 64;
  std::size_t total_steps = 200'000;
  std::size_t hidden = 64;
  std::size_t replay_capacity = 50'000;
  /// Transitions collected before the first gradient step.
  std::size_t learning_starts = 1000;
  std::size_t train_every = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double divergence_limit = 1e6;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train.gamma must be in (0, 1]");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= epsilon_start)) {
      throw ConfigError("train epsilon schedule must satisfy 0 <= epsilon_end <= epsilon_start <= 1");
    }
    if (!(epsilon_fraction > 0.0 && epsilon_fraction <= 1.0)) throw ConfigError("train.epsilon_fraction must be in (0, 1]");
    if (target_sync == 0 || batch_size == 0 || total_steps == 0 || hidden == 0 || replay_capacity == 0 ||
        train_every == 0) {
      throw ConfigError("train sizes and intervals must be positive");
    }
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Linear decay from epsilon_start to epsilon_end, then flat.
inline double epsilon_at(const TrainConfig& cfg, std::size_t step) {
  const double horizon = cfg.epsilon_fraction * static_cast<double>(cfg.total_steps);
  const double t = static_cast<double>(step) / horizon;
  if (t >= 1.0) return cfg.epsilon_end;
  return cfg.epsilon_start + t * (cfg.epsilon_end - cfg.epsilon_start);
}

/// Lowest-index argmax over the first `valid` entries.
inline std::size_t argmax(const std::vector<double>& values, std::size_t valid) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < std::min(valid, values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

/// Epsilon-greedy action over codes [0, action_count); action_count defaults to
/// the network's output size.
inline Action act(const QNetwork& q, const Observation& obs, double epsilon, Rng& rng,
                  std::optional<std::size_t> action_count = std::nullopt) {
  if (obs.size() > q.inputs()) throw DomainError("observation length does not match network input");
  const std::size_t n = action_count.value_or(q.outputs());
  if (n == 0 || n > q.outputs()) throw DomainError("action count does not match network output");
  if (rng.uniform() < epsilon) return {rng.below(n)};
  return {argmax(q.forward(obs), n)};
}

inline Action act(const QNetwork& q, const Observation& obs, double epsilon, std::uint64_t seed) {
  Rng rng(seed);
  return act(q, obs, epsilon, rng);
}

/// Migrate to a honey subnet the host with the most aggressive-recon plus
/// content-search events this window (ties to the lowest id); otherwise no-op.
inline Action heuristic_policy(const Observation& obs) {
  std::optional<HostId> best;
  std::uint32_t best_count = 0;
  for (HostId h = 0; h < obs.hosts(); ++h) {
    const std::uint32_t c = obs.count(h, EventKind::recon_aggressive) + obs.count(h, EventKind::content_search);
    if (c > best_count) {
      best_count = c;
      best = h;
    }
  }
  return best ? Action::make(Verb::migrate_honey, *best) : Action::noop();
}

/// One minibatch of transitions with fixed regression targets.
struct Batch {
  std::vector<SparseInput> inputs;
  std::vector<std::size_t> actions;
  std::vector<double> targets;
};

/// Loss = mean over the batch of 0.5 * (Q(s, a) - y)^2.
inline double batch_loss(const QNetwork& q, const Batch& b) {
  std::vector<double> h;
  double loss = 0.0;
  for (std::size_t n = 0; n < b.inputs.size(); ++n) {
    q.hidden_layer(b.inputs[n], h);
    const double d = q.output(h, b.actions[n]) - b.targets[n];
    loss += 0.5 * d * d;
  }
  return loss / static_cast<double>(b.inputs.size());
}

/// Analytic gradient of batch_loss, accumulated into `grad` (same layout as
/// params). Returns the mean |Q(s, a)| over the batch.
inline double batch_gradient(const QNetwork& q, const Batch& b, std::vector<double>& grad) {
  grad.assign(q.params().size(), 0.0);
  const std::size_t H = q.hidden();
  const double inv_n = 1.0 / static_cast<double>(b.inputs.size());
  std::vector<double> h, dh(H);
  double mean_abs_q = 0.0;
  for (std::size_t n = 0; n < b.inputs.size(); ++n) {
    const auto& x = b.inputs[n];
    const std::size_t a = b.actions[n];
    q.hidden_layer(x, h);
    const double qa = q.output(h, a);
    mean_abs_q += std::abs(qa) * inv_n;
    const double g = (qa - b.targets[n]) * inv_n;
    grad[q.b2_offset() + a] += g;
    double* gw2 = &grad[q.w2_offset() + a * H];
    for (std::size_t k = 0; k < H; ++k) {
      gw2[k] += g * h[k];
      dh[k] = h[k] > 0.0 ? g * q.w2(a, k) : 0.0;
    }
    double* gb1 = &grad[q.b1_offset()];
    for (std::size_t k = 0; k < H; ++k) gb1[k] += dh[k];
    for (const auto& [i, v] : x) {
      double* gw1 = &grad[i * H];
      for (std::size_t k = 0; k < H; ++k) gw1[k] += v * dh[k];
    }
  }
  return mean_abs_q;
}

/// TD targets r + gamma * max_a' Q_target(s', a') * (1 - done).
inline Batch make_batch(const QNetwork& target, const std::vector<const Transition*>& items, double gamma) {
  Batch b;
  std::vector<double> h;
  for (const Transition* t : items) {
    b.inputs.push_back(to_features(t->obs));
    b.actions.push_back(t->action);
    double y = t->reward;
    if (!t->done) {
      target.hidden_layer(to_features(t->next_obs), h);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t o = 0; o < t->action_count; ++o) best = std::max(best, target.output(h, o));
      y += gamma * best;
    }
    b.targets.push_back(y);
  }
  return b;
}

/// Max relative error between analytic and central-difference gradients of
/// the TD loss, over up to `samples` randomly chosen parameters (all of them
/// when the network is smaller). The network itself serves as the frozen
/// target. Relative error is |a - n| / max(|a|, |n|, floor); pairs that are
/// both exactly zero count as 0.
inline double grad_check(const QNetwork& q, const std::vector<Transition>& batch, std::uint64_t seed = 0,
                         std::size_t samples = 100, double step = 1e-5, double floor = 1e-8) {
  if (batch.empty()) throw DomainError("grad_check needs a non-empty batch");
  std::vector<const Transition*> items;
  for (const auto& t : batch) items.push_back(&t);
  const Batch b = make_batch(q, items, 0.99);
  std::vector<double> analytic;
  batch_gradient(q, b, analytic);

  const std::size_t P = q.params().size();
  std::vector<std::size_t> chosen(P);
  for (std::size_t i = 0; i < P; ++i) chosen[i] = i;
  if (P > samples) {
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) std::swap(chosen[i], chosen[i + rng.below(P - i)]);
    chosen.resize(samples);
  }
  QNetwork probe = q;
  double worst = 0.0;
  for (std::size_t i : chosen) {
    const double w = probe.params()[i];
    probe.params()[i] = w + step;
    const double up = batch_loss(probe, b);
    probe.params()[i] = w - step;
    const double down = batch_loss(probe, b);
    probe.params()[i] = w;
    const double numeric = (up - down) / (2.0 * step);
    const double diff = std::abs(analytic[i] - numeric);
    if (diff == 0.0) continue;
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

/// Adam state for a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    const double lr = lr_ * std::sqrt(c2) / c1;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i];
      if (g == 0.0 && m_[i] == 0.0 && v_[i] == 0.0) continue;
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * g * g;
      params[i] -= lr * m_[i] / (std::sqrt(v_[i]) + eps_ * std::sqrt(c2));
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

/// Online and target networks plus the optimizer. `update` takes one Adam step
/// on a minibatch; `sync` copies online weights into the target.
class TDLearner {
 public:
  TDLearner(QNetwork initial, const TrainConfig& cfg)
      : online_(std::move(initial)),
        target_(online_),
        adam_(online_.params().size(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps),
        gamma_(cfg.gamma),
        divergence_limit_(cfg.divergence_limit) {}

  /// Returns the batch mean |Q(s, a)| before the step.
  double update(const std::vector<const Transition*>& items) {
    const Batch b = make_batch(target_, items, gamma_);
    const double mean_abs_q = batch_gradient(online_, b, grad_);
    if (!std::isfinite(mean_abs_q) || mean_abs_q > divergence_limit_) {
      throw DivergenceError("mean |Q| reached " + std::to_string(mean_abs_q) + " after " + std::to_string(updates_) +
                            " updates");
    }
    adam_.step(online_.params(), grad_);
    ++updates_;
    return mean_abs_q;
  }

  void sync() { target_ = online_; }

  const QNetwork& online() const noexcept { return online_; }
  const QNetwork& target() const noexcept { return target_; }
  QNetwork release() && { return std::move(online_); }
  std::size_t updates() const noexcept { return updates_; }

 private:
  QNetwork online_;
  QNetwork target_;
  Adam adam_;
  double gamma_;
  double divergence_limit_;
  std::vector<double> grad_;
  std::size_t updates_ = 0;
};

struct EpisodeRecord {
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  double ret = 0.0;
  std::size_t length = 0;
  TerminationCause cause = TerminationCause::none;
  RedVariant variant = RedVariant::faithful;
  std::size_t stage = 0;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

using Policy = std::function<Action(const Observation&, std::size_t action_count)>;

inline std::uint64_t episode_seed(std::uint64_t run_seed, std::size_t episode) { return mix_seed(run_seed, 0x1000 + episode); }

inline EpisodeRecord run_episode(const ScenarioConfig& cfg, std::uint64_t seed, const Policy& policy) {
  auto [env, obs] = reset(cfg, seed);
  EpisodeRecord rec;
  rec.seed = seed;
  rec.variant = cfg.variant;
  while (!env.done()) {
    auto r = env.step(policy(obs, env.action_count()));
    rec.ret += r.reward;
    obs = std::move(r.observation);
  }
  rec.length = env.state().step_counter;
  rec.cause = env.cause();
  return rec;
}

inline std::vector<EpisodeRecord> evaluate(const EnvFactory& factory, const Policy& policy, std::size_t episodes,
                                           std::uint64_t seed) {
  std::vector<EpisodeRecord> out;
  std::vector<double> history;
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::uint64_t s = episode_seed(seed, e);
    auto rec = run_episode(factory.next(s, history), s, policy);
    rec.episode = e;
    rec.stage = factory.stage(history);
    history.push_back(rec.ret);
    out.push_back(rec);
  }
  return out;
}

inline Policy greedy_policy(const QNetwork& q) {
  return [&q](const Observation& obs, std::size_t n) {
    Rng unused(0);
    return act(q, obs, 0.0, unused, n);
  };
}

inline Policy random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const Observation&, std::size_t n) { return Action{rng->below(n)}; };
}

inline Policy heuristic() {
  return [](const Observation& obs, std::size_t) { return heuristic_policy(obs); };
}

struct TrainResult {
  QNetwork network;
  std::vector<EpisodeRecord> curve;
  std::size_t steps = 0;
};

/// Deep Q-learning against environments drawn from `factory`. Deterministic in
/// `seed`. Episodes still running when the step budget ends are not recorded.
inline TrainResult train(const EnvFactory& factory, const TrainConfig& cfg, std::uint64_t seed,
                         const std::function<void(const EpisodeRecord&)>& on_episode = {}) {
  cfg.validate();
  if (factory.max_hosts < 2) throw ConfigError("environment factory reports fewer than two hosts");
  const std::size_t inputs = factory.max_hosts * kEventKinds;
  const std::size_t outputs = Action::count(factory.max_hosts);

  Rng rng(mix_seed(seed, 0x747261));
  TDLearner learner(QNetwork::random(inputs, cfg.hidden, outputs, rng), cfg);
  ReplayBuffer replay(cfg.replay_capacity);
  std::vector<double> history;
  std::vector<const Transition*> picked;
  TrainResult result;

  // Smaller networks need no padding: host h's counts sit at the same feature
  // indices for every host count.
  std::size_t step = 0;
  for (std::size_t episode = 0; step < cfg.total_steps; ++episode) {
    const std::uint64_t es = episode_seed(seed, episode);
    const ScenarioConfig env_cfg = factory.next(es, history);
    auto [env, first] = reset(env_cfg, es);
    Observation obs = std::move(first);
    EpisodeRecord rec;
    rec.episode = episode;
    rec.seed = es;
    rec.variant = env_cfg.variant;
    rec.stage = factory.stage(history);

    while (!env.done() && step < cfg.total_steps) {
      const Action a = act(learner.online(), obs, epsilon_at(cfg, step), rng, env.action_count());
      auto r = env.step(a);
      Observation next = std::move(r.observation);
      rec.ret += r.reward;
      replay.push({obs, a.code, r.reward, next, r.done, env.action_count()});
      obs = std::move(next);
      ++step;

      if (replay.size() >= std::max(cfg.learning_starts, cfg.batch_size) && step % cfg.train_every == 0) {
        picked.clear();
        for (std::size_t i : replay.sample_indices(cfg.batch_size, rng)) picked.push_back(&replay[i]);
        try {
          learner.update(picked);
        } catch (const DivergenceError& e) {
          throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step) + " (learning_rate " +
                                std::to_string(cfg.learning_rate) + ")");
        }
      }
      if (step % cfg.target_sync == 0) learner.sync();
    }
    if (!env.done()) break;
    rec.length = env.state().step_counter;
    rec.cause = env.cause();
    history.push_back(rec.ret);
    result.curve.push_back(rec);
    if (on_episode) on_episode(rec);
  }
  result.steps = step;
  result.network = std::move(learner).release();
  return result;
}

// ---------------------------------------------------------------------------
// Weight files: "NEFQ1", then inputs, hidden, outputs as little-endian u64,
// then W1 (hidden x inputs), b1, W2 (outputs x hidden), b2 as row-major
// little-endian IEEE-754 doubles.

inline constexpr std::array<char, 5> kWeightsMagic{'N', 'E', 'F', 'Q', '1'};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw DomainError("weights file truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(os, bits);
}

inline double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace detail

inline void write_weights(std::ostream& os, const QNetwork& q) {
  os.write(kWeightsMagic.data(), kWeightsMagic.size());
  detail::put_u64(os, q.inputs());
  detail::put_u64(os, q.hidden());
  detail::put_u64(os, q.outputs());
  for (std::size_t h = 0; h < q.hidden(); ++h)
    for (std::size_t i = 0; i < q.inputs(); ++i) detail::put_f64(os, q.w1(h, i));
  for (std::size_t h = 0; h < q.hidden(); ++h) detail::put_f64(os, q.b1(h));
  for (std::size_t o = 0; o < q.outputs(); ++o)
    for (std::size_t h = 0; h < q.hidden(); ++h) detail::put_f64(os, q.w2(o, h));
  for (std::size_t o = 0; o < q.outputs(); ++o) detail::put_f64(os, q.b2(o));
}

inline QNetwork read_weights(std::istream& is) {
  std::array<char, 5> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kWeightsMagic) throw DomainError("bad weights magic");
  const std::uint64_t in = detail::get_u64(is), hid = detail::get_u64(is), out = detail::get_u64(is);
  constexpr std::uint64_t kMaxDim = 1u << 20;
  if (in == 0 || hid == 0 || out == 0 || in > kMaxDim || hid > kMaxDim || out > kMaxDim) {
    throw DomainError("implausible weights dimensions");
  }
  QNetwork q(in, hid, out);
  for (std::size_t h = 0; h < hid; ++h)
    for (std::size_t i = 0; i < in; ++i) q.w1(h, i) = detail::get_f64(is);
  for (std::size_t h = 0; h < hid; ++h) q.b1(h) = detail::get_f64(is);
  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t h = 0; h < hid; ++h) q.w2(o, h) = detail::get_f64(is);
  for (std::size_t o = 0; o < out; ++o) q.b2(o) = detail::get_f64(is);
  for (double w : q.params()) {
    if (!std::isfinite(w)) throw DomainError("weights file contains non-finite values");
  }
  return q;
}

inline void save_weights(const std::string& path, const QNetwork& q) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot open " + path + " for writing");
  write_weights(os, q);
}

inline QNetwork load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("cannot open " + path);
  return read_weights(is);
}

}  // namespace netenv
