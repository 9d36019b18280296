// Copyright 2026 The HOLA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HOLA_PPO_HPP
#define HOLA_PPO_HPP

// Clipped-surrogate policy optimisation for the parametric pursuer policy,
// with generalised advantage estimation and an optional population-entropy
// reward bonus.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hola/arena.hpp"
#include "hola/core.hpp"
#include "hola/episode.hpp"
#include "hola/network.hpp"
#include "hola/policies.hpp"

namespace hola {

struct TrainerConfig {
  int batch_size = 1024;
  int minibatch_size = 256;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  double value_coef = 1.0;
  double entropy_coef = 0.01;
  double clip_ratio = 0.2;
  int epochs = 20;
  std::int64_t total_env_steps = 1000000;
  double max_grad_norm = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    std::vector<std::string> bad;
    if (batch_size < 1) bad.push_back("batch_size must be >= 1");
    if (minibatch_size < 1 || minibatch_size > batch_size) bad.push_back("minibatch_size must be in [1, batch_size]");
    else if (batch_size % minibatch_size != 0) bad.push_back("minibatch_size must divide batch_size");
    if (!(gamma > 0.0 && gamma <= 1.0)) bad.push_back("gamma must be in (0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) bad.push_back("gae_lambda must be in [0, 1]");
    if (!(learning_rate > 0.0)) bad.push_back("learning_rate must be positive");
    if (!(value_coef >= 0.0)) bad.push_back("value_coef must be >= 0");
    if (!(entropy_coef >= 0.0)) bad.push_back("entropy_coef must be >= 0");
    if (!(clip_ratio > 0.0)) bad.push_back("clip_ratio must be positive");
    if (epochs < 1) bad.push_back("epochs must be >= 1");
    if (total_env_steps < 0) bad.push_back("total_env_steps must be >= 0");
    if (!(max_grad_norm > 0.0)) bad.push_back("max_grad_norm must be positive");
    if (!bad.empty()) {
      std::string msg = "invalid trainer config:";
      for (auto& b : bad) msg += " " + b + ";";
      throw ConfigError(msg);
    }
  }
};

// ---------------------------------------------------------------------------
// Reward

struct RewardConfig {
  double step_penalty = -0.01;
  double capture_reward = 10.0;     // per capture by any pursuer, shared by the team
  double collision_penalty = -5.0;  // per collision event involving the learner
  double shaping_coef = 0.1;        // times the decrease of the closest pursuer-evader distance
};

// Closest distance between an active pursuer and an active evader, taking only
// pairs that are active in `mask`. Infinity if there is none.
inline double closest_pursuit(const WorldState& positions, const WorldState& mask, int num_pursuers) {
  double best = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(mask.drones.size());
  for (int p = 0; p < num_pursuers; ++p) {
    if (!mask.drones[p].active) continue;
    for (int e = num_pursuers; e < n; ++e)
      if (mask.drones[e].active) best = std::min(best, distance(positions.drones[p].position, positions.drones[e].position));
  }
  return best;
}

inline double step_reward(const RewardConfig& rc, int num_pursuers, const WorldState& before, const WorldState& after,
                          const StepEvents& ev, int learner) {
  double r = rc.step_penalty + rc.capture_reward * static_cast<double>(ev.captures.size());
  int hits = 0;
  for (auto [a, b] : ev.pursuer_collisions) hits += (a == learner || b == learner) ? 1 : 0;
  for (int id : ev.obstacle_collisions) hits += id == learner ? 1 : 0;
  r += rc.collision_penalty * hits;
  // Shaping over the pairs that are still in play after the step.
  const double d0 = closest_pursuit(before, after, num_pursuers);
  const double d1 = closest_pursuit(after, after, num_pursuers);
  if (std::isfinite(d0) && std::isfinite(d1)) r += rc.shaping_coef * (d0 - d1);
  return r;
}

// ---------------------------------------------------------------------------
// Population entropy

// log of the uniform mixture of the population's Gaussians at pre-action u,
// with the density clamped below at 1e-8.
inline constexpr double kDensityFloor = 1e-8;

inline double mixture_log_density(std::span<const NetOutput> heads, double u) {
  require(!heads.empty(), "population must be nonempty");
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  logs.reserve(heads.size());
  for (const auto& h : heads) {
    logs.push_back(gaussian_log_density(u, h.mean, h.log_std));
    hi = std::max(hi, logs.back());
  }
  double s = 0.0;
  for (double l : logs) s += std::exp(l - hi);
  const double lse = hi + std::log(s) - std::log(static_cast<double>(heads.size()));
  return std::max(lse, std::log(kDensityFloor));
}

// Single-sample estimate of the mixture entropy at this observation: -log of
// the mixture density at the taken pre-action, averaged with mc_samples - 1
// further draws from the mixture. Scaled by alpha.
inline double population_entropy_bonus(std::span<const PolicyParameters* const> population,
                                       std::span<const double> features, double taken_pre_action, int mc_samples,
                                       Rng& rng, double alpha) {
  require(!population.empty(), "population must be nonempty");
  require(mc_samples >= 1, "mc_samples must be >= 1");
  std::vector<NetOutput> heads;
  heads.reserve(population.size());
  for (const auto* p : population) heads.push_back(forward(*p, features));
  double total = -mixture_log_density(heads, taken_pre_action);
  for (int s = 1; s < mc_samples; ++s) {
    const auto& h = heads[uniform_index(rng, heads.size())];
    const double u = h.mean + std::exp(h.log_std) * standard_normal(rng);
    total -= mixture_log_density(heads, u);
  }
  return alpha * total / mc_samples;
}

// ---------------------------------------------------------------------------
// Rollouts

struct Transition {
  std::vector<double> features;
  double pre_action = 0.0;
  double action = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  double bonus = 0.0;
  bool done = false;       // learner trajectory ended (learner deactivated or all evaders caught)
  bool truncated = false;  // cut by the horizon or by the buffer end; bootstrap from next_value
  double next_value = 0.0;
};

struct RolloutBuffer {
  std::vector<Transition> steps;
  std::vector<double> advantages;
  std::vector<double> returns;
  bool finalized = false;
  int episodes = 0;            // episodes played to termination
  double return_sum = 0.0;     // learner reward summed over those episodes
  int successes = 0;           // of those, episodes where every evader was caught

  std::size_t size() const { return steps.size(); }
  double mean_return() const { return episodes ? return_sum / episodes : 0.0; }
  double success_rate() const { return episodes ? static_cast<double>(successes) / episodes : 0.0; }
};

// One episode to play: the learner takes pursuer slot 0, `teammates` fill the
// remaining pursuer slots.
struct EpisodeSpec {
  std::vector<PolicyHandle> teammates;
  std::uint64_t seed = 0;
};

using EpisodeSource = std::function<std::optional<EpisodeSpec>()>;

// Reward bonus for the learner's step at (features, pre_action).
using BonusFn = std::function<double(std::span<const double>, double, Rng&)>;

struct RolloutContext {
  const Arena* arena = nullptr;
  const PolicyTuning* tuning = nullptr;
  RewardConfig reward;
};

// Gathers `steps` learner transitions over as many episodes as needed. The
// learner samples from the slot-0 stream of each episode seed, so a buffer is
// a deterministic function of (params, episode specs, rng).
inline RolloutBuffer collect_rollouts(const PolicyParameters& params, const RolloutContext& ctx,
                                      const EpisodeSource& source, int steps, Rng& rng, const BonusFn& bonus = {}) {
  require(ctx.arena && ctx.tuning, "rollout context is incomplete");
  require(steps >= 0, "steps must be >= 0");
  const Arena& arena = *ctx.arena;
  const auto& cfg = arena.config();
  const int np = cfg.num_pursuers;
  RolloutBuffer buf;
  buf.steps.reserve(static_cast<std::size_t>(steps));
  const auto learner_handle = PolicyHandle::parametric(params, "learner");

  while (static_cast<int>(buf.size()) < steps) {
    auto spec = source();
    if (!spec) throw ContractError("episode source exhausted");
    require(static_cast<int>(spec->teammates.size()) == np - 1, "episode spec needs num_pursuers - 1 teammates");
    std::vector<Controller> ctrls;
    std::vector<Rng> rngs;
    for (int i = 0; i < cfg.num_drones(); ++i) {
      const PolicyHandle& h = i == 0 ? learner_handle : i < np ? spec->teammates[i - 1] : PolicyHandle::evader();
      ctrls.emplace_back(h, *ctx.tuning);
      rngs.emplace_back(slot_seed(spec->seed, i));
    }
    WorldState w = arena.new_world(spec->seed);
    std::vector<Action> actions(cfg.num_drones());
    double episode_return = 0.0;
    int captures = 0;
    bool recording = true, cut = false;
    while (!arena.is_terminal(w)) {
      ControlOutput mine;
      for (int i = 0; i < cfg.num_drones(); ++i) {
        if (!w.drones[i].active) {
          actions[i] = Action(0.0);
          continue;
        }
        ControlOutput out = ctrls[i].act(arena, w, i, rngs[i], i == 0 && recording);
        actions[i] = out.action;
        if (i == 0) mine = std::move(out);
      }
      const bool learner_acts = recording && w.drones[0].active;
      const WorldState before = learner_acts ? w : WorldState{};
      const StepEvents ev = arena.advance(w, actions);
      captures += static_cast<int>(ev.captures.size());
      if (!learner_acts) continue;

      Transition t;
      t.reward = step_reward(ctx.reward, np, before, w, ev, 0);
      if (bonus) t.bonus = bonus(mine.features, mine.pre_action, rng);
      t.features = std::move(mine.features);
      t.pre_action = mine.pre_action;
      t.action = mine.action.value();
      t.log_prob = mine.log_prob;
      t.value = mine.value;
      episode_return += t.reward;
      const bool learner_gone = !w.drones[0].active || ev.terminal_reason == TerminalReason::all_captured;
      const bool full = static_cast<int>(buf.size()) + 1 == steps;
      if (learner_gone) {
        t.done = true;
      } else if (ev.terminal || full) {
        t.truncated = true;
        t.next_value = forward(params, observation_features(arena.observe(w, 0))).value;
      }
      buf.steps.push_back(std::move(t));
      if (learner_gone || ev.terminal) recording = false;
      if (full && !learner_gone) {
        cut = !ev.terminal;
        break;
      }
      if (full) recording = false;
    }
    if (!cut) {
      ++buf.episodes;
      buf.return_sum += episode_return;
      buf.successes += captures >= cfg.num_evaders ? 1 : 0;
    }
  }
  return buf;
}

// Backward GAE recursion. Advantages are stored raw; normalisation happens in
// the update.
inline void compute_gae(RolloutBuffer& buf, double gamma, double lambda) {
  const std::size_t n = buf.size();
  buf.advantages.assign(n, 0.0);
  buf.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const Transition& t = buf.steps[k];
    const bool last_of_segment = t.done || t.truncated || k + 1 == n;
    double next_v;
    if (t.done) next_v = 0.0;
    else if (t.truncated) next_v = t.next_value;
    else next_v = k + 1 < n ? buf.steps[k + 1].value : 0.0;
    const double delta = t.reward + t.bonus + gamma * next_v - t.value;
    const double adv = delta + (last_of_segment ? 0.0 : gamma * lambda * next_adv);
    buf.advantages[k] = adv;
    buf.returns[k] = adv + t.value;
    next_adv = adv;
  }
  buf.finalized = true;
}

inline std::vector<double> normalized_advantages(const RolloutBuffer& buf) {
  const std::size_t n = buf.advantages.size();
  std::vector<double> out(buf.advantages);
  if (n == 0) return out;
  double mean = 0.0;
  for (double a : out) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : out) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (double& a : out) a = sd > 0.0 ? (a - mean) / sd : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Loss and update

struct LossParts {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

inline double gaussian_entropy(double log_std) { return 0.5 * std::log(kTwoPi * std::exp(1.0)) + log_std; }

// Minibatch loss  -surrogate + c1 * MSE(value) - c_ent * entropy  and its
// gradient (accumulated into grad, which is zeroed first).
inline LossParts ppo_loss_and_gradient(const PolicyParameters& p, const RolloutBuffer& buf,
                                       std::span<const double> advantages, std::span<const std::size_t> batch,
                                       const TrainerConfig& cfg, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  LossParts L;
  const double inv = 1.0 / static_cast<double>(batch.size());
  ForwardCache cache;
  for (std::size_t k : batch) {
    const Transition& t = buf.steps[k];
    const NetOutput out = forward(p, t.features, &cache);
    const double logp = squashed_log_prob(t.pre_action, out.mean, out.log_std);
    const double ratio = std::exp(logp - t.log_prob);
    const double a = advantages[k];
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
    const bool unclipped_active = ratio * a <= clipped * a;
    L.policy -= std::min(ratio * a, clipped * a) * inv;
    L.clip_fraction += (std::abs(ratio - 1.0) > cfg.clip_ratio ? 1.0 : 0.0) * inv;
    L.approx_kl += (t.log_prob - logp) * inv;
    const double err = out.value - buf.returns[k];
    L.value += err * err * inv;
    L.entropy += gaussian_entropy(out.log_std) * inv;

    const double d_logp = unclipped_active ? -a * ratio * inv : 0.0;
    const double sd_inv = std::exp(-out.log_std);
    const double z = (t.pre_action - out.mean) * sd_inv;
    const double d_mean = d_logp * z * sd_inv;
    const double d_log_std = d_logp * (z * z - 1.0) - cfg.entropy_coef * inv;
    const double d_value = cfg.value_coef * 2.0 * err * inv;
    backward(p, cache, d_mean, d_log_std, d_value, grad);
  }
  L.total = L.policy + cfg.value_coef * L.value - cfg.entropy_coef * L.entropy;
  return L;
}

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
};

inline void adam_step(PolicyParameters& p, AdamState& s, std::span<const double> grad, const TrainerConfig& cfg) {
  if (s.m.size() != p.values.size()) {
    s.m.assign(p.values.size(), 0.0);
    s.v.assign(p.values.size(), 0.0);
    s.t = 0;
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    s.m[i] = cfg.adam_beta1 * s.m[i] + (1.0 - cfg.adam_beta1) * grad[i];
    s.v[i] = cfg.adam_beta2 * s.v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
    p.values[i] -= cfg.learning_rate * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + cfg.adam_epsilon);
  }
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;  // before clipping
  int minibatches = 0;
};

inline UpdateStats ppo_update(PolicyParameters& params, AdamState& opt, const RolloutBuffer& buf,
                              const TrainerConfig& cfg, Rng& rng) {
  require(buf.finalized, "compute advantages before updating");
  UpdateStats st;
  const std::size_t n = buf.size();
  if (n == 0) return st;
  const std::vector<double> adv = normalized_advantages(buf);
  const std::size_t mb = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.minibatch_size));
  std::vector<std::size_t> order(n);
  std::vector<double> grad(params.values.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::span<const std::size_t> batch(order.data() + start, std::min(mb, n - start));
      const LossParts L = ppo_loss_and_gradient(params, buf, adv, batch, cfg, grad);
      if (!std::isfinite(L.total)) {
        char msg[256];
        std::snprintf(msg, sizeof msg,
                      "non-finite loss at epoch %d (policy %g, value %g, entropy %g); "
                      "check the learning rate (%g) and advantage scale",
                      epoch, L.policy, L.value, L.entropy, cfg.learning_rate);
        throw DivergenceError(msg);
      }
      double norm = 0.0;
      for (double g : grad) norm += g * g;
      norm = std::sqrt(norm);
      if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient norm at epoch " + std::to_string(epoch));
      if (norm > cfg.max_grad_norm)
        for (double& g : grad) g *= cfg.max_grad_norm / norm;
      adam_step(params, opt, grad, cfg);
      st.policy_loss += L.policy;
      st.value_loss += L.value;
      st.entropy += L.entropy;
      st.clip_fraction += L.clip_fraction;
      st.approx_kl += L.approx_kl;
      st.grad_norm += norm;
      ++st.minibatches;
    }
  }
  const double k = 1.0 / st.minibatches;
  st.policy_loss *= k;
  st.value_loss *= k;
  st.entropy *= k;
  st.clip_fraction *= k;
  st.approx_kl *= k;
  st.grad_norm *= k;
  return st;
}

// ---------------------------------------------------------------------------
// Trainer: parameters plus optimiser state across iterations

struct IterationLog {
  int iteration = 0;
  std::int64_t env_steps = 0;  // cumulative
  int episodes = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  UpdateStats update;
};

inline const char* kIterationCsvHeader =
    "iteration,env_steps,episodes,mean_return,success_rate,policy_loss,value_loss,entropy,clip_fraction,approx_kl";

inline std::string csv_row(const IterationLog& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%lld,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.iteration,
                static_cast<long long>(r.env_steps), r.episodes, r.mean_return, r.success_rate, r.update.policy_loss,
                r.update.value_loss, r.update.entropy, r.update.clip_fraction, r.update.approx_kl);
  return buf;
}

class PpoTrainer {
 public:
  PpoTrainer(PolicyParameters params, TrainerConfig cfg, std::uint64_t seed)
      : params_(std::move(params)), cfg_(std::move(cfg)), rng_(seed) {
    cfg_.validate();
    params_.check();
  }

  const PolicyParameters& params() const { return params_; }
  const TrainerConfig& config() const { return cfg_; }
  std::int64_t env_steps() const { return env_steps_; }
  int iterations() const { return iteration_; }

  // One collect / advantage / update cycle of up to `steps` transitions.
  IterationLog iterate(const RolloutContext& ctx, const EpisodeSource& source, int steps, const BonusFn& bonus = {}) {
    RolloutBuffer buf = collect_rollouts(params_, ctx, source, steps, rng_, bonus);
    compute_gae(buf, cfg_.gamma, cfg_.gae_lambda);
    IterationLog log;
    log.update = ppo_update(params_, opt_, buf, cfg_, rng_);
    env_steps_ += static_cast<std::int64_t>(buf.size());
    log.iteration = ++iteration_;
    log.env_steps = env_steps_;
    log.episodes = buf.episodes;
    log.mean_return = buf.mean_return();
    log.success_rate = buf.success_rate();
    return log;
  }

 private:
  PolicyParameters params_;
  TrainerConfig cfg_;
  AdamState opt_;
  Rng rng_;
  std::int64_t env_steps_ = 0;
  int iteration_ = 0;
};

}  // namespace hola

#endif  // HOLA_PPO_HPP
