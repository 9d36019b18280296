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

#ifndef HOLA_EPISODE_HPP
#define HOLA_EPISODE_HPP

#include <optional>
#include <vector>

#include "hola/arena.hpp"
#include "hola/policies.hpp"

namespace hola {

struct EpisodeResult {
  std::uint64_t seed = 0;
  int length = 0;  // ticks until termination
  int captures = 0;
  bool all_captured = false;
  bool collision = false;  // any collision event involving a pursuer
  int pursuer_collision_events = 0;
  int obstacle_collision_events = 0;
  TerminalReason reason = TerminalReason::none;
  std::optional<EpisodeTrace> trace;
};

inline std::vector<DroneState> poses_of(const WorldState& w) { return w.drones; }

// Sampling stream of one drone slot within an episode.
inline std::uint64_t slot_seed(std::uint64_t episode_seed, int slot) {
  return derive_seed(episode_seed, {0x51u, static_cast<std::uint64_t>(slot)});
}

// Plays one full episode. Pursuer slots take `team` in order, every evader runs
// `evader`. Spawns come from `seed`; each slot's sampling stream is derived
// from (seed, slot).
inline EpisodeResult run_episode(const Arena& arena, const PolicyTuning& tuning, const std::vector<PolicyHandle>& team,
                                 const PolicyHandle& evader, std::uint64_t seed, bool record_trace = false) {
  const auto& cfg = arena.config();
  require(static_cast<int>(team.size()) == cfg.num_pursuers, "team size must equal num_pursuers");
  std::vector<Controller> ctrls;
  std::vector<Rng> rngs;
  for (int i = 0; i < cfg.num_drones(); ++i) {
    ctrls.emplace_back(i < cfg.num_pursuers ? team[i] : evader, tuning);
    rngs.emplace_back(slot_seed(seed, i));
  }
  WorldState w = arena.new_world(seed);
  EpisodeResult res;
  res.seed = seed;
  if (record_trace) {
    res.trace.emplace();
    res.trace->seed = seed;
    res.trace->config_hash = arena.config_hash();
    res.trace->records.push_back({0, poses_of(w), {}, {}});
  }
  std::vector<Action> actions(cfg.num_drones());
  while (!arena.is_terminal(w)) {
    for (int i = 0; i < cfg.num_drones(); ++i)
      actions[i] = w.drones[i].active ? ctrls[i].act(arena, w, i, rngs[i]).action : Action(0.0);
    StepEvents ev = arena.advance(w, actions);
    res.captures += static_cast<int>(ev.captures.size());
    res.pursuer_collision_events += static_cast<int>(ev.pursuer_collisions.size());
    for (int id : ev.obstacle_collisions) res.obstacle_collision_events += id < cfg.num_pursuers ? 1 : 0;
    res.collision |= ev.any_pursuer_collision(cfg.num_pursuers);
    if (ev.terminal) res.reason = ev.terminal_reason;
    if (record_trace) {
      std::vector<double> raw;
      raw.reserve(actions.size());
      for (auto a : actions) raw.push_back(a.value());
      res.trace->records.push_back({w.tick, poses_of(w), std::move(raw), std::move(ev)});
    }
  }
  res.length = w.tick;
  res.all_captured = res.captures >= cfg.num_evaders;
  return res;
}

}  // namespace hola

#endif  // HOLA_EPISODE_HPP
