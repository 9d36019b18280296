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

#ifndef HOLA_POLICIES_HPP
#define HOLA_POLICIES_HPP

// Rule-based pursuers (Greedy, VICSEK, APF-A, the D3QN-G shell), the scripted
// evader, and a uniform controller over those plus the parametric network.
//
// Rule-based pursuers reason in the observer's heading frame and emit only an
// orientation; the arena supplies the fixed speed.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "hola/arena.hpp"
#include "hola/network.hpp"

namespace hola {

namespace detail {

inline Vec2 unit_at(double bearing) { return Vec2::polar(1.0, bearing); }

// Nearest visible, active opponent in the observer frame.
inline std::optional<SlotView> nearest_target(const Observation& o) {
  std::optional<SlotView> best;
  for (const auto& s : o.opponents)
    if (s.visible && s.active && (!best || s.distance < best->distance)) best = s;
  return best;
}

// Observer-frame direction towards an absolute point when nothing is visible.
inline double bearing_to_point(const Observation& o, Vec2 boundary, Vec2 target) {
  const Vec2 self{o.self_position.x * boundary.x, o.self_position.y * boundary.y};
  const Vec2 rel = target - self;
  if (rel.norm() == 0.0) return 0.0;
  return wrap_signed(rel.angle() - o.self_heading);
}

// Sum of gain/d^2 pushes away from everything inside `range`.
struct Repulsor {
  double distance;
  double bearing;
};

inline Vec2 inverse_square_push(const std::vector<Repulsor>& rs, double gain, double range, double min_distance) {
  Vec2 f;
  for (const auto& r : rs) {
    if (r.distance >= range) continue;
    const double d = std::max(r.distance, min_distance);
    f += (-gain / (d * d)) * unit_at(r.bearing);
  }
  return f;
}

inline std::vector<Repulsor> teammate_repulsors(const Observation& o) {
  std::vector<Repulsor> out;
  for (const auto& s : o.teammates)
    if (s.visible && s.active) out.push_back({s.distance, s.bearing});
  return out;
}

inline std::vector<Repulsor> obstacle_repulsors(const Observation& o) {
  std::vector<Repulsor> out;
  if (o.nearest_obstacle.visible) out.push_back({o.nearest_obstacle.distance, o.nearest_obstacle.bearing});
  if (o.nearest_wall.visible) out.push_back({o.nearest_wall.distance, o.nearest_wall.bearing});
  return out;
}

inline Action absolute(const Observation& o, double body_angle) {
  return Action::from_heading(o.self_heading + body_angle);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Greedy

struct GreedyTuning {
  double evasion_range = 0.3;      // repulsors closer than this trigger avoidance
  double clearance_radius = 0.15;  // cone half-angle = asin(clearance / distance)
  double tie_margin = 0.2;         // radians; cone exits this close count as tied
  Vec2 boundary{3.6, 5.0};         // de-normalizes self_position
  Vec2 fallback_target{1.8, 4.7};  // evader spawn centroid

  static GreedyTuning for_arena(const ArenaConfig& c) {
    GreedyTuning t;
    t.boundary = {c.w_b, c.h_b};
    t.fallback_target = c.evader_spawn().center;
    return t;
  }
};

// Half-angle of the blocked cone around a repulsor at distance d.
inline double clearance_angle(double d, double clearance_radius) {
  if (d <= clearance_radius) return kPi / 2;
  return std::asin(clearance_radius / d);
}

// Heads for the nearest visible evader (or the fallback target). Teammates,
// obstacles and walls inside the evasion range block a cone of directions; the
// desired heading is rotated by the smallest angle that leaves every cone.
inline Action greedy_action(const Observation& o, const GreedyTuning& t) {
  const auto target = detail::nearest_target(o);
  const double desired = target ? target->bearing : detail::bearing_to_point(o, t.boundary, t.fallback_target);

  struct Cone {
    double center, half;
  };
  std::vector<Cone> cones;
  auto add = [&](double d, double b) {
    if (d < t.evasion_range) cones.push_back({b, clearance_angle(d, t.clearance_radius)});
  };
  for (const auto& r : detail::teammate_repulsors(o)) add(r.distance, r.bearing);
  for (const auto& r : detail::obstacle_repulsors(o)) add(r.distance, r.bearing);

  constexpr double kEps = 1e-9;
  auto blocked = [&](double a) {
    return std::any_of(cones.begin(), cones.end(),
                       [&](const Cone& c) { return std::abs(wrap_signed(a - c.center)) < c.half - kEps; });
  };
  if (!blocked(desired)) return detail::absolute(o, desired);

  // Smallest rotation wins; near-ties go to the edge closer to the current
  // heading (body angle 0) so the agent does not dither around obstacles.
  std::optional<double> best;
  double best_dev = 0.0;
  for (const auto& c : cones) {
    for (double edge : {c.center + c.half, c.center - c.half}) {
      if (blocked(edge)) continue;
      const double dev = std::abs(wrap_signed(edge - desired));
      const bool better = !best || dev < best_dev - t.tie_margin ||
                          (dev <= best_dev + t.tie_margin && std::abs(wrap_signed(edge)) < std::abs(wrap_signed(*best)));
      if (better) {
        best = edge;
        best_dev = dev;
      }
    }
  }
  if (best) return detail::absolute(o, *best);
  // Fully enclosed: back away from the closest repulsor.
  double closest = std::numeric_limits<double>::infinity(), away = desired;
  for (const auto& r : detail::teammate_repulsors(o))
    if (r.distance < closest) closest = r.distance, away = r.bearing + kPi;
  for (const auto& r : detail::obstacle_repulsors(o))
    if (r.distance < closest) closest = r.distance, away = r.bearing + kPi;
  return detail::absolute(o, away);
}

// ---------------------------------------------------------------------------
// VICSEK-style group chase

struct VicsekTuning {
  double t_pred = 1.0;           // seconds of evader motion to lead by
  double homing_radius = 2.0;    // lead time shrinks linearly to 0 inside this distance
  double c_attract = 1.0;
  double c_p = 0.02;             // teammate repulsion gain (force = c_p / d^2)
  double r_p = 0.6;              // teammate repulsion cutoff
  double c_o = 0.01;             // obstacle/wall repulsion gain
  double r_o = 0.3;              // obstacle/wall repulsion cutoff
  double min_distance = 0.02;    // floor on d inside 1/d^2
  Vec2 boundary{3.6, 5.0};
  Vec2 fallback_target{1.8, 4.7};

  static VicsekTuning for_arena(const ArenaConfig& c) {
    VicsekTuning t;
    t.boundary = {c.w_b, c.h_b};
    t.fallback_target = c.evader_spawn().center;
    return t;
  }
};

// Attraction to the predicted evader position plus inverse-square repulsion
// from teammates and obstacles; only the orientation of the sum is used.
inline Action vicsek_action(const Observation& o, const VicsekTuning& t) {
  Vec2 attraction;
  if (const auto target = detail::nearest_target(o)) {
    const Vec2 rel = Vec2::polar(target->distance, target->bearing);
    // Predicted evader position, kept inside the arena.
    const Vec2 self{o.self_position.x * t.boundary.x, o.self_position.y * t.boundary.y};
    const double lead = t.t_pred * std::min(1.0, target->distance / t.homing_radius);
    Vec2 aim_world = self + (rel + lead * target->velocity).rotated(o.self_heading);
    aim_world = {std::clamp(aim_world.x, 0.0, t.boundary.x), std::clamp(aim_world.y, 0.0, t.boundary.y)};
    const Vec2 aim = (aim_world - self).rotated(-o.self_heading);
    const Vec2 dir = aim.norm() > 0.0 ? aim : rel;
    if (dir.norm() > 0.0) attraction = (t.c_attract / dir.norm()) * dir;
  } else {
    attraction = t.c_attract * detail::unit_at(detail::bearing_to_point(o, t.boundary, t.fallback_target));
  }
  Vec2 f = attraction;
  f += detail::inverse_square_push(detail::teammate_repulsors(o), t.c_p, t.r_p, t.min_distance);
  f += detail::inverse_square_push(detail::obstacle_repulsors(o), t.c_o, t.r_o, t.min_distance);
  if (f.norm() < 1e-12) f = attraction;
  if (f.norm() < 1e-12) return detail::absolute(o, 0.0);
  return detail::absolute(o, f.angle());
}

// ---------------------------------------------------------------------------
// Artificial potential field with attention (APF-A)

struct ApfParams {
  double lambda = 0.0;  // inter-robot force gain
  double eta = 0.0;     // obstacle repulsion gain
  friend bool operator==(const ApfParams&, const ApfParams&) = default;
};

inline constexpr int kApfLambdaCount = 8;
inline constexpr int kApfEtaCount = 3;
inline constexpr int kApfGridSize = kApfLambdaCount * kApfEtaCount;
inline constexpr int kApfDefaultIndex = 3 * kApfEtaCount + 1;  // mid-grid (lambda #3, eta = 1)

// lambda log-spaced over [0.1, 5]; eta in {0.5, 1, 2}. Index = lambda_idx * 3 + eta_idx.
inline ApfParams apf_grid(int index) {
  require(index >= 0 && index < kApfGridSize, "APF-A index out of range");
  const int li = index / kApfEtaCount, ei = index % kApfEtaCount;
  constexpr double etas[kApfEtaCount] = {0.5, 1.0, 2.0};
  return {0.1 * std::pow(50.0, li / double(kApfLambdaCount - 1)), etas[ei]};
}

struct ApfTuning {
  double k_obstacle = 0.01;  // force = eta * k_obstacle / d^2
  double k_robot = 0.01;     // force = lambda * k_robot / d^2
  double r_o = 0.3;
  double r_p = 0.5;
  double min_distance = 0.02;
  Vec2 boundary{3.6, 5.0};
  Vec2 fallback_target{1.8, 4.7};

  static ApfTuning for_arena(const ArenaConfig& c) {
    ApfTuning t;
    t.boundary = {c.w_b, c.h_b};
    t.fallback_target = c.evader_spawn().center;
    return t;
  }
};

inline Vec2 apf_force(const Observation& o, const ApfParams& p, const ApfTuning& t) {
  const auto target = detail::nearest_target(o);
  Vec2 f = detail::unit_at(target ? target->bearing : detail::bearing_to_point(o, t.boundary, t.fallback_target));
  f += p.eta * detail::inverse_square_push(detail::obstacle_repulsors(o), t.k_obstacle, t.r_o, t.min_distance);
  f += p.lambda * detail::inverse_square_push(detail::teammate_repulsors(o), t.k_robot, t.r_p, t.min_distance);
  return f;
}

inline Action apf_a_action(const Observation& o, const ApfParams& p, const ApfTuning& t = {}) {
  const Vec2 f = apf_force(o, p, t);
  if (f.norm() < 1e-12) return detail::absolute(o, 0.0);
  return detail::absolute(o, f.angle());
}

// ---------------------------------------------------------------------------
// D3QN-G shell: APF-A with a pluggable (lambda, eta) selector until the team's
// first capture, Greedy afterwards.

using ApfSelector = std::function<int(const Observation&)>;

struct D3qnShell {
  ApfSelector selector;  // empty: fixed mid-grid pair
  int captures_seen = 0;

  // Captures are also inferred from evader slots that went inactive.
  void observe_captures(const Observation& o) {
    int inactive = 0;
    for (const auto& s : o.opponents) inactive += s.active ? 0 : 1;
    captures_seen = std::max(captures_seen, inactive);
  }
  void record_capture() { ++captures_seen; }
};

inline Action d3qn_g_action(D3qnShell& shell, const Observation& o, const ApfTuning& apf,
                            const GreedyTuning& greedy) {
  shell.observe_captures(o);
  if (shell.captures_seen > 0) return greedy_action(o, greedy);
  const int idx = shell.selector ? shell.selector(o) : kApfDefaultIndex;
  return apf_a_action(o, apf_grid(idx), apf);
}

// ---------------------------------------------------------------------------
// Scripted evader

struct EvaderTuning {
  double c_pursuer = 1.0;       // pursuer repulsion gain (force = c / d^2), cutoff d_p
  double c_o = 0.01;            // obstacle/wall repulsion gain
  double r_o = 0.4;             // obstacle/wall repulsion cutoff
  double squeeze_angle = kPi / 4;  // pursuer/obstacle pushes this close to opposed => wall following
  double min_distance = 0.02;
};

namespace detail {

// Distance from p along direction `dir` to the boundary.
inline double ray_to_boundary(const ArenaConfig& c, Vec2 p, Vec2 dir) {
  double t = std::numeric_limits<double>::infinity();
  if (dir.x > 1e-12) t = std::min(t, (c.w_b - p.x) / dir.x);
  if (dir.x < -1e-12) t = std::min(t, -p.x / dir.x);
  if (dir.y > 1e-12) t = std::min(t, (c.h_b - p.y) / dir.y);
  if (dir.y < -1e-12) t = std::min(t, -p.y / dir.y);
  return t;
}

// Distance from p along unit `dir` to the boundary or the first obstacle.
inline double free_run(const Arena& arena, Vec2 p, Vec2 dir) {
  double t = ray_to_boundary(arena.config(), p, dir);
  for (const auto& r : arena.obstacles()) {
    const Vec2 lo = r.lo(), hi = r.hi();
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    bool hit = true;
    for (int axis = 0; axis < 2 && hit; ++axis) {
      const double o = axis ? p.y : p.x, d = axis ? dir.y : dir.x;
      const double l = axis ? lo.y : lo.x, h = axis ? hi.y : hi.x;
      if (std::abs(d) < 1e-12) {
        hit = o >= l && o <= h;
      } else {
        double a = (l - o) / d, b = (h - o) / d;
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
        hit = t0 <= t1;
      }
    }
    if (hit) t = std::min(t, t0);
  }
  return t;
}

// Of +dir and -dir, the one with more room before the boundary (+dir on ties).
inline Vec2 roomier(const ArenaConfig& c, Vec2 p, Vec2 dir) {
  return ray_to_boundary(c, p, -1.0 * dir) > ray_to_boundary(c, p, dir) ? -1.0 * dir : dir;
}

}  // namespace detail

// Inverse-square repulsion from visible pursuers and nearby obstacles/walls.
// When the pursuer push and the obstacle push are nearly opposed (the evader is
// being pinned), it slides along the obstacle surface away from the nearest
// pursuer instead.
inline Action evader_action(const Arena& arena, const WorldState& w, int id, const EvaderTuning& t) {
  const auto& cfg = arena.config();
  const DroneState& self = w.drones[id];
  const Vec2 p = self.position;

  Vec2 fp;
  std::optional<Vec2> nearest_pursuer;
  double nearest_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.num_pursuers; ++i) {
    const auto& d = w.drones[i];
    if (!d.active) continue;
    const Vec2 away = p - d.position;
    const double dist = away.norm();
    if (dist > cfg.d_p) continue;
    const double r = std::max(dist, t.min_distance);
    if (dist > 0.0) fp += (t.c_pursuer / (r * r * dist)) * away;
    if (dist < nearest_d) nearest_d = dist, nearest_pursuer = d.position;
  }

  // Obstacle and wall surfaces within r_o: (distance, outward unit normal).
  struct Surface {
    double dist;
    Vec2 normal;
  };
  std::vector<Surface> surfaces;
  auto add_surface = [&](Vec2 from, double dist, Vec2 fallback_dir) {
    if (dist >= t.r_o) return;
    const Vec2 dir = p - from;
    surfaces.push_back({dist, dir.norm() > 0.0 ? (1.0 / dir.norm()) * dir : fallback_dir});
  };
  for (const auto& r : arena.obstacles()) {
    const Vec2 out = p - r.center;
    add_surface(closest_point(p, r), rect_distance(p, r), out.norm() > 0 ? (1.0 / out.norm()) * out : Vec2{0, 1});
  }
  add_surface({0.0, p.y}, p.x, {1, 0});
  add_surface({cfg.w_b, p.y}, cfg.w_b - p.x, {-1, 0});
  add_surface({p.x, 0.0}, p.y, {0, 1});
  add_surface({p.x, cfg.h_b}, cfg.h_b - p.y, {0, -1});

  Vec2 fo;
  const Surface* nearest_surface = nullptr;
  for (const auto& s : surfaces) {
    const double r = std::max(s.dist, t.min_distance);
    fo += (t.c_o / (r * r)) * s.normal;
    if (!nearest_surface || s.dist < nearest_surface->dist) nearest_surface = &s;
  }

  if (fp.norm() > 0.0 && nearest_surface) {
    const Vec2 n = nearest_surface->normal;
    const double cosang = fp.dot(n) / fp.norm();
    if (cosang < -std::cos(t.squeeze_angle)) {
      Vec2 tangent{-n.y, n.x};
      const double side = tangent.dot(p - *nearest_pursuer);
      if (std::abs(side) < 1e-12) tangent = detail::roomier(cfg, p, tangent);
      else if (side < 0) tangent = -1.0 * tangent;
      // Slide the other way when the preferred side has no room left. Once
      // sliding back, keep going until the preferred side has twice the room.
      const double room = detail::free_run(arena, p, tangent);
      const bool sliding_back = Vec2::polar(1.0, self.heading).dot(tangent) < -0.5;
      const double needed = sliding_back ? 2.0 * t.r_o : t.r_o;
      if (room < needed && detail::free_run(arena, p, -1.0 * tangent) > room) tangent = -1.0 * tangent;
      return Action::from_heading(tangent.angle());
    }
  }

  const Vec2 f = fp + fo;
  if (f.norm() > 1e-9 * (fp.norm() + fo.norm() + 1e-300)) return Action::from_heading(f.angle());
  if (nearest_pursuer) {
    const Vec2 rel = p - *nearest_pursuer;
    Vec2 perp = rel.norm() > 0 ? Vec2{-rel.y, rel.x} : Vec2{0, 1};
    perp = (1.0 / perp.norm()) * detail::roomier(cfg, p, perp);
    return Action::from_heading(perp.angle());
  }
  return Action::from_heading(self.heading);
}

// ---------------------------------------------------------------------------
// Uniform policy handle and controller

enum class PolicyKind { greedy, vicsek, apf_a, d3qn_g_shell, evader, parametric };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::greedy: return "greedy";
    case PolicyKind::vicsek: return "vicsek";
    case PolicyKind::apf_a: return "apf_a";
    case PolicyKind::d3qn_g_shell: return "d3qn_g";
    case PolicyKind::evader: return "evader";
    case PolicyKind::parametric: return "parametric";
  }
  return "?";
}

struct PolicyHandle {
  PolicyKind kind = PolicyKind::greedy;
  std::string id;
  int apf_index = kApfDefaultIndex;  // apf_a and d3qn_g only
  std::shared_ptr<const PolicyParameters> parameters;  // parametric only

  static PolicyHandle greedy() { return {PolicyKind::greedy, "greedy", kApfDefaultIndex, nullptr}; }
  static PolicyHandle vicsek() { return {PolicyKind::vicsek, "vicsek", kApfDefaultIndex, nullptr}; }
  static PolicyHandle evader() { return {PolicyKind::evader, "evader", kApfDefaultIndex, nullptr}; }
  static PolicyHandle apf_a(int index) {
    apf_grid(index);
    return {PolicyKind::apf_a, "apf_a:" + std::to_string(index), index, nullptr};
  }
  static PolicyHandle d3qn_g(int index = kApfDefaultIndex) {
    apf_grid(index);
    return {PolicyKind::d3qn_g_shell, "d3qn_g:" + std::to_string(index), index, nullptr};
  }
  static PolicyHandle parametric(PolicyParameters p, std::string id) {
    p.check();
    PolicyHandle h{PolicyKind::parametric, std::move(id), kApfDefaultIndex, nullptr};
    h.parameters = std::make_shared<const PolicyParameters>(std::move(p));
    return h;
  }
};

// Tuning constants for every rule-based policy in one place.
struct PolicyTuning {
  GreedyTuning greedy;
  VicsekTuning vicsek;
  ApfTuning apf;
  EvaderTuning evader;

  static PolicyTuning for_arena(const ArenaConfig& c) {
    PolicyTuning t;
    t.greedy = GreedyTuning::for_arena(c);
    t.vicsek = VicsekTuning::for_arena(c);
    t.apf = ApfTuning::for_arena(c);
    return t;
  }
};

struct ControlOutput {
  Action action;
  double pre_action = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
  std::vector<double> features;  // parametric only
};

// Per-episode instance of a policy; owns the D3QN-G phase state.
class Controller {
 public:
  Controller(PolicyHandle handle, const PolicyTuning& tuning, ApfSelector selector = {})
      : handle_(std::move(handle)), tuning_(&tuning) {
    if (handle_.kind == PolicyKind::parametric) require(handle_.parameters != nullptr, "parametric handle without parameters");
    if (handle_.kind == PolicyKind::d3qn_g_shell) {
      const int fixed = handle_.apf_index;
      shell_.selector = selector ? std::move(selector) : ApfSelector([fixed](const Observation&) { return fixed; });
    }
  }

  const PolicyHandle& handle() const { return handle_; }

  ControlOutput act(const Arena& arena, const WorldState& w, int id, Rng& rng, bool keep_features = false) {
    ControlOutput out;
    if (handle_.kind == PolicyKind::evader) {
      out.action = evader_action(arena, w, id, tuning_->evader);
      return out;
    }
    const Observation obs = arena.observe(w, id);
    switch (handle_.kind) {
      case PolicyKind::greedy: out.action = greedy_action(obs, tuning_->greedy); break;
      case PolicyKind::vicsek: out.action = vicsek_action(obs, tuning_->vicsek); break;
      case PolicyKind::apf_a: out.action = apf_a_action(obs, apf_grid(handle_.apf_index), tuning_->apf); break;
      case PolicyKind::d3qn_g_shell: out.action = d3qn_g_action(shell_, obs, tuning_->apf, tuning_->greedy); break;
      case PolicyKind::parametric: {
        auto f = observation_features(obs);
        const ActSample s = parametric_act_features(*handle_.parameters, f, rng);
        out.action = s.action;
        out.pre_action = s.pre_action;
        out.log_prob = s.log_prob;
        out.value = s.value;
        if (keep_features) out.features = std::move(f);
        break;
      }
      case PolicyKind::evader: break;
    }
    return out;
  }

 private:
  PolicyHandle handle_;
  const PolicyTuning* tuning_;
  D3qnShell shell_;
};

// Resolves names used in configs and on the command line: greedy, vicsek,
// evader, d3qn_g[:<index>], apf_a:<index>, parametric:<checkpoint-path>.
inline PolicyHandle policy_from_name(const std::string& name) {
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
  auto index = [&](int fallback) {
    if (arg.empty()) return fallback;
    try {
      return std::stoi(arg);
    } catch (const std::exception&) {
      throw ConfigError("bad APF-A index in policy name '" + name + "'");
    }
  };
  if (head == "greedy" && arg.empty()) return PolicyHandle::greedy();
  if (head == "vicsek" && arg.empty()) return PolicyHandle::vicsek();
  if (head == "evader" && arg.empty()) return PolicyHandle::evader();
  try {
    if (head == "d3qn_g") return PolicyHandle::d3qn_g(index(kApfDefaultIndex));
    if (head == "apf_a") return PolicyHandle::apf_a(index(kApfDefaultIndex));
  } catch (const ContractError& e) {
    throw ConfigError("policy '" + name + "': " + e.what());
  }
  if (head == "parametric" && !arg.empty()) {
    auto ck = load_checkpoint(arg);
    return PolicyHandle::parametric(std::move(ck.params), name);
  }
  throw ConfigError("unknown policy '" + name + "'");
}

}  // namespace hola

#endif  // HOLA_POLICIES_HPP
