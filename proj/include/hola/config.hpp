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


#ifndef HOLA_CONFIG_HPP
#define HOLA_CONFIG_HPP

#include <charconv>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hola/arena.hpp"
#include "hola/openended.hpp"
#include "hola/policies.hpp"
#include "hola/ppo.hpp"

namespace hola {

struct RunConfig {
  ArenaConfig arena = ArenaConfig::defaults();
  PolicyTuning tuning = PolicyTuning::for_arena(ArenaConfig::defaults());
  TrainerConfig trainer;
  RewardConfig reward;
  GenerationConfig generation;

  Lab lab() const { return Lab(arena, tuning, trainer, reward, generation); }
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

struct ConfigKey {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<bool(RunConfig&, const std::string&)> set;  // false on a malformed value
};

template <class T, class Access>
ConfigKey number_key(std::string name, Access access) {
  return {std::move(name),
          [access](const RunConfig& c) {
            const T v = access(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) return format_number(v);
            else return std::to_string(v);
          },
          [access](RunConfig& c, const std::string& s) {
            T v{};
            if (!parse_number(s, v)) return false;
            access(c) = v;
            return true;
          }};
}

template <class Access>
ConfigKey real(std::string name, Access a) { return number_key<double>(std::move(name), a); }
template <class Access>
ConfigKey integer(std::string name, Access a) { return number_key<int>(std::move(name), a); }

template <class Access>
ConfigKey flag(std::string name, Access access) {
  return {std::move(name), [access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [access](RunConfig& c, const std::string& s) {
            if (s == "true" || s == "1") access(c) = true;
            else if (s == "false" || s == "0") access(c) = false;
            else return false;
            return true;
          }};
}

template <class Access, class FromName>
ConfigKey named(std::string name, Access access, FromName from_name) {
  return {std::move(name), [access](const RunConfig& c) { return to_string(access(const_cast<RunConfig&>(c))); },
          [access, from_name](RunConfig& c, const std::string& s) {
            access(c) = from_name(s);
            return true;
          }};
}

// Every scalar key in file order. `obstacle` lines are handled separately.
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
#define HOLA_ACCESS(expr) [](RunConfig& c) -> auto& { return c.expr; }
    k.push_back(real("arena.w_b", HOLA_ACCESS(arena.w_b)));
    k.push_back(real("arena.h_b", HOLA_ACCESS(arena.h_b)));
    k.push_back(real("arena.w_s", HOLA_ACCESS(arena.w_s)));
    k.push_back(real("arena.h_s", HOLA_ACCESS(arena.h_s)));
    k.push_back(real("arena.w_o", HOLA_ACCESS(arena.w_o)));
    k.push_back(real("arena.h_o", HOLA_ACCESS(arena.h_o)));
    k.push_back(real("arena.d_c", HOLA_ACCESS(arena.d_c)));
    k.push_back(real("arena.d_p", HOLA_ACCESS(arena.d_p)));
    k.push_back(real("arena.d_s", HOLA_ACCESS(arena.d_s)));
    k.push_back(real("arena.kappa", HOLA_ACCESS(arena.kappa)));
    k.push_back(real("arena.v_P", HOLA_ACCESS(arena.v_P)));
    k.push_back(real("arena.v_E", HOLA_ACCESS(arena.v_E)));
    k.push_back(real("arena.t_max", HOLA_ACCESS(arena.t_max)));
    k.push_back(real("arena.fps", HOLA_ACCESS(arena.fps)));
    k.push_back(integer("arena.num_pursuers", HOLA_ACCESS(arena.num_pursuers)));
    k.push_back(integer("arena.num_evaders", HOLA_ACCESS(arena.num_evaders)));
    k.push_back(flag("arena.deactivate_captor", HOLA_ACCESS(arena.deactivate_captor)));

    k.push_back(real("greedy.evasion_range", HOLA_ACCESS(tuning.greedy.evasion_range)));
    k.push_back(real("greedy.clearance_radius", HOLA_ACCESS(tuning.greedy.clearance_radius)));
    k.push_back(real("greedy.tie_margin", HOLA_ACCESS(tuning.greedy.tie_margin)));
    k.push_back(real("vicsek.t_pred", HOLA_ACCESS(tuning.vicsek.t_pred)));
    k.push_back(real("vicsek.homing_radius", HOLA_ACCESS(tuning.vicsek.homing_radius)));
    k.push_back(real("vicsek.c_attract", HOLA_ACCESS(tuning.vicsek.c_attract)));
    k.push_back(real("vicsek.c_p", HOLA_ACCESS(tuning.vicsek.c_p)));
    k.push_back(real("vicsek.r_p", HOLA_ACCESS(tuning.vicsek.r_p)));
    k.push_back(real("vicsek.c_o", HOLA_ACCESS(tuning.vicsek.c_o)));
    k.push_back(real("vicsek.r_o", HOLA_ACCESS(tuning.vicsek.r_o)));
    k.push_back(real("apf.k_obstacle", HOLA_ACCESS(tuning.apf.k_obstacle)));
    k.push_back(real("apf.k_robot", HOLA_ACCESS(tuning.apf.k_robot)));
    k.push_back(real("apf.r_o", HOLA_ACCESS(tuning.apf.r_o)));
    k.push_back(real("apf.r_p", HOLA_ACCESS(tuning.apf.r_p)));
    k.push_back(real("evader.c_pursuer", HOLA_ACCESS(tuning.evader.c_pursuer)));
    k.push_back(real("evader.c_o", HOLA_ACCESS(tuning.evader.c_o)));
    k.push_back(real("evader.r_o", HOLA_ACCESS(tuning.evader.r_o)));
    k.push_back(real("evader.squeeze_angle", HOLA_ACCESS(tuning.evader.squeeze_angle)));

    k.push_back(integer("ppo.batch_size", HOLA_ACCESS(trainer.batch_size)));
    k.push_back(integer("ppo.minibatch_size", HOLA_ACCESS(trainer.minibatch_size)));
    k.push_back(real("ppo.gamma", HOLA_ACCESS(trainer.gamma)));
    k.push_back(real("ppo.gae_lambda", HOLA_ACCESS(trainer.gae_lambda)));
    k.push_back(real("ppo.learning_rate", HOLA_ACCESS(trainer.learning_rate)));
    k.push_back(real("ppo.value_coef", HOLA_ACCESS(trainer.value_coef)));
    k.push_back(real("ppo.entropy_coef", HOLA_ACCESS(trainer.entropy_coef)));
    k.push_back(real("ppo.clip_ratio", HOLA_ACCESS(trainer.clip_ratio)));
    k.push_back(integer("ppo.epochs", HOLA_ACCESS(trainer.epochs)));
    k.push_back(number_key<std::int64_t>("ppo.total_env_steps", HOLA_ACCESS(trainer.total_env_steps)));
    k.push_back(real("ppo.max_grad_norm", HOLA_ACCESS(trainer.max_grad_norm)));
    k.push_back(real("ppo.adam_beta1", HOLA_ACCESS(trainer.adam_beta1)));
    k.push_back(real("ppo.adam_beta2", HOLA_ACCESS(trainer.adam_beta2)));
    k.push_back(real("ppo.adam_epsilon", HOLA_ACCESS(trainer.adam_epsilon)));

    k.push_back(real("reward.step_penalty", HOLA_ACCESS(reward.step_penalty)));
    k.push_back(real("reward.capture", HOLA_ACCESS(reward.capture_reward)));
    k.push_back(real("reward.collision", HOLA_ACCESS(reward.collision_penalty)));
    k.push_back(real("reward.shaping", HOLA_ACCESS(reward.shaping_coef)));

    k.push_back(integer("gen.edge_size", HOLA_ACCESS(generation.edge_size)));
    k.push_back(integer("gen.episodes_per_edge", HOLA_ACCESS(generation.episodes_per_edge)));
    k.push_back(integer("gen.acceptance_rank", HOLA_ACCESS(generation.acceptance_rank)));
    k.push_back(integer("gen.max_graph_size", HOLA_ACCESS(generation.max_graph_size)));
    k.push_back(integer("gen.generations", HOLA_ACCESS(generation.generations)));
    k.push_back(number_key<std::int64_t>("gen.generation_steps", HOLA_ACCESS(generation.generation_steps)));
    k.push_back(integer("gen.acceptance_interval", HOLA_ACCESS(generation.acceptance_interval)));
    k.push_back(integer("gen.population_size", HOLA_ACCESS(generation.population_size)));
    k.push_back(real("gen.alpha", HOLA_ACCESS(generation.alpha)));
    k.push_back(integer("gen.entropy_mc_samples", HOLA_ACCESS(generation.entropy_mc_samples)));
    k.push_back(named("gen.phi_mode", HOLA_ACCESS(generation.phi_mode), phi_mode_from_name));
    k.push_back(named("gen.phi_shape", HOLA_ACCESS(generation.phi_shape), phi_shape_from_name));
    k.push_back(real("gen.phi_epsilon", HOLA_ACCESS(generation.phi_epsilon)));
    k.push_back(number_key<std::uint64_t>("gen.seed", HOLA_ACCESS(generation.seed)));
    k.push_back(integer("gen.workers", HOLA_ACCESS(generation.workers)));
#undef HOLA_ACCESS
    return k;
  }();
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Serializes every key, so parse_config(to_config_text(c)) reproduces c.
inline std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  std::string section;
  for (const auto& k : detail::config_keys()) {
    const std::string prefix = k.name.substr(0, k.name.find('.'));
    if (prefix != section) {
      if (!section.empty()) os << '\n';
      if (section == "arena") {
        if (c.arena.obstacle_centers.empty()) os << "obstacle = none\n";
        for (auto o : c.arena.obstacle_centers)
          os << "obstacle = " << detail::format_number(o.x) << ' ' << detail::format_number(o.y) << '\n';
        os << '\n';
      }
      section = prefix;
    }
    os << k.name << " = " << k.get(c) << '\n';
  }
  return os.str();
}

// `key = value` lines; '#' starts a comment. Keys not given keep their
// defaults. Each `obstacle = x y` line adds an obstacle center, the first one
// replacing the default layout; `obstacle = none` clears it. Errors name the
// source and line.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
  RunConfig c;
  std::map<std::string, const detail::ConfigKey*> index;
  for (const auto& k : detail::config_keys()) index.emplace(k.name, &k);
  std::set<std::string> seen;
  bool obstacles_given = false;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& why) { return ConfigError(source + ":" + std::to_string(line_no) + ": " + why); };
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (value.empty()) throw fail("missing value for '" + key + "'");
    if (key == "obstacle") {
      if (!obstacles_given) c.arena.obstacle_centers.clear();
      obstacles_given = true;
      if (value == "none") continue;
      std::istringstream vs(value);
      std::string xs, ys, extra;
      Vec2 p;
      if (!(vs >> xs >> ys) || (vs >> extra) || !detail::parse_number(xs, p.x) || !detail::parse_number(ys, p.y))
        throw fail("obstacle expects two numbers 'x y', got '" + value + "'");
      c.arena.obstacle_centers.push_back(p);
      continue;
    }
    auto it = index.find(key);
    if (it == index.end()) throw fail("unknown key '" + key + "'");
    if (!seen.insert(key).second) throw fail("duplicate key '" + key + "'");
    try {
      if (!it->second->set(c, value)) throw fail("bad value '" + value + "' for '" + key + "'");
    } catch (const ConfigError& e) {
      if (std::string(e.what()).starts_with(source + ":")) throw;
      throw fail(e.what());
    }
  }
  // Geometry-derived tuning follows the arena actually configured.
  for (auto* b : {&c.tuning.greedy.boundary, &c.tuning.vicsek.boundary, &c.tuning.apf.boundary})
    *b = {c.arena.w_b, c.arena.h_b};
  for (auto* f : {&c.tuning.greedy.fallback_target, &c.tuning.vicsek.fallback_target, &c.tuning.apf.fallback_target})
    *f = c.arena.evader_spawn().center;
  try {
    c.lab();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

// "default" (or an empty path) selects the built-in configuration.
inline RunConfig load_config(const std::string& path) {
  if (path.empty() || path == "default") return RunConfig{};
  return parse_config(read_text(path), path);
}

}  // namespace hola

#endif  // HOLA_CONFIG_HPP
