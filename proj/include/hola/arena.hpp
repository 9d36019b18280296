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

#ifndef HOLA_ARENA_HPP
#define HOLA_ARENA_HPP

// Deterministic 2D kinematic pursuit-evasion arena.
//
// Drones are holonomic points moving at a fixed team speed along an absolute
// heading chosen every tick. Obstacles are axis-aligned rectangles that do not
// block motion; getting closer than the safe radius to one (or to a wall) is a
// recorded collision event. A pursuer closer than the capture distance to an
// active evader captures it, and both drones go inactive.

#include <array>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hola/core.hpp"

namespace hola {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double angle() const { return std::atan2(y, x); }
  Vec2 rotated(double a) const {
    const double c = std::cos(a), s = std::sin(a);
    return {c * x - s * y, s * x + c * y};
  }
  static Vec2 polar(double r, double a) { return {r * std::cos(a), r * std::sin(a)}; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Axis-aligned rectangle given by its center and extents.
struct Rect {
  Vec2 center;
  double width = 0.0;
  double height = 0.0;

  Vec2 lo() const { return {center.x - width / 2, center.y - height / 2}; }
  Vec2 hi() const { return {center.x + width / 2, center.y + height / 2}; }
  bool contains(Vec2 p) const {
    return p.x >= lo().x && p.x <= hi().x && p.y >= lo().y && p.y <= hi().y;
  }
  bool overlaps(const Rect& o) const {
    return lo().x < o.hi().x && o.lo().x < hi().x && lo().y < o.hi().y && o.lo().y < hi().y;
  }
  static Rect from_bounds(Vec2 lo, Vec2 hi) {
    return {{(lo.x + hi.x) / 2, (lo.y + hi.y) / 2}, hi.x - lo.x, hi.y - lo.y};
  }
};

inline Vec2 closest_point(Vec2 p, const Rect& r) {
  const Vec2 lo = r.lo(), hi = r.hi();
  return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y)};
}

// Euclidean distance from a point to a closed rectangle, 0 inside.
inline double rect_distance(Vec2 p, const Rect& r) {
  return distance(p, closest_point(p, r));
}

struct ArenaConfig {
  double w_b = 3.6;   // boundary width
  double h_b = 5.0;   // boundary height
  double w_s = 3.2;   // spawn band width
  double h_s = 0.6;   // spawn band height
  double w_o = 0.65;  // obstacle width
  double h_o = 0.1;   // obstacle height
  std::vector<Vec2> obstacle_centers;
  double d_c = 0.2;    // capture distance
  double d_p = 2.0;    // perception range
  double d_s = 0.1;    // safe radius (drone to obstacle/wall)
  double kappa = 0.2;  // pursuer-pursuer collision threshold
  double v_P = 0.3;
  double v_E = 0.6;
  double t_max = 100.0;
  double fps = 10.0;
  int num_pursuers = 3;
  int num_evaders = 2;
  bool deactivate_captor = true;

  // Five obstacles in two staggered rows between the spawn bands.
  static ArenaConfig defaults() {
    ArenaConfig c;
    c.obstacle_centers = {{0.8, 1.8}, {1.8, 1.8}, {2.8, 1.8}, {1.3, 3.2}, {2.3, 3.2}};
    return c;
  }

  int num_drones() const { return num_pursuers + num_evaders; }
  double dt() const { return 1.0 / fps; }
  int max_ticks() const { return static_cast<int>(std::llround(t_max * fps)); }
  Rect boundary() const { return {{w_b / 2, h_b / 2}, w_b, h_b}; }
  Rect pursuer_spawn() const { return {{w_b / 2, h_s / 2}, w_s, h_s}; }
  Rect evader_spawn() const { return {{w_b / 2, h_b - h_s / 2}, w_s, h_s}; }

  std::vector<Rect> obstacles() const {
    std::vector<Rect> out;
    out.reserve(obstacle_centers.size());
    for (auto c : obstacle_centers) out.push_back({c, w_o, h_o});
    return out;
  }

  // Throws ConfigError naming every violated invariant.
  void validate() const {
    std::vector<std::string> bad;
    auto positive = [&](double v, const char* name) {
      if (!(std::isfinite(v) && v > 0.0)) bad.push_back(std::string(name) + " must be positive and finite");
    };
    positive(w_b, "w_b");
    positive(h_b, "h_b");
    positive(w_s, "w_s");
    positive(h_s, "h_s");
    positive(w_o, "w_o");
    positive(h_o, "h_o");
    positive(d_c, "d_c");
    positive(d_p, "d_p");
    positive(d_s, "d_s");
    positive(kappa, "kappa");
    positive(v_P, "v_P");
    positive(v_E, "v_E");
    positive(t_max, "t_max");
    positive(fps, "fps");
    if (num_pursuers < 1) bad.push_back("num_pursuers must be >= 1");
    if (num_evaders < 1) bad.push_back("num_evaders must be >= 1");
    if (bad.empty()) {
      if (!(d_s < d_c)) bad.push_back("d_s must be smaller than d_c");
      if (!(v_P < v_E)) bad.push_back("v_P must be smaller than v_E");
      const double ticks = t_max * fps;
      if (std::abs(ticks - std::round(ticks)) > 1e-9) bad.push_back("t_max * fps must be an integer");
      if (w_s > w_b || 2 * h_s > h_b) bad.push_back("spawn bands do not fit in the boundary");
      const Rect bound = boundary();
      const Rect ps = pursuer_spawn(), es = evader_spawn();
      for (std::size_t i = 0; i < obstacle_centers.size(); ++i) {
        const Rect o{obstacle_centers[i], w_o, h_o};
        if (!std::isfinite(o.center.x) || !std::isfinite(o.center.y) || !bound.contains(o.lo()) ||
            !bound.contains(o.hi()))
          bad.push_back("obstacle " + std::to_string(i) + " is not inside the boundary");
        if (o.overlaps(ps) || o.overlaps(es))
          bad.push_back("obstacle " + std::to_string(i) + " intersects a spawn band");
      }
    }
    if (!bad.empty()) {
      std::string msg = "invalid arena config:";
      for (auto& b : bad) msg += " " + b + ";";
      throw ConfigError(msg);
    }
  }

  // Exact textual form; two configs hash equal iff every field is bit-equal.
  std::string canonical() const {
    std::ostringstream os;
    os << "w_b=" << hexfloat(w_b) << ";h_b=" << hexfloat(h_b) << ";w_s=" << hexfloat(w_s)
       << ";h_s=" << hexfloat(h_s) << ";w_o=" << hexfloat(w_o) << ";h_o=" << hexfloat(h_o)
       << ";d_c=" << hexfloat(d_c) << ";d_p=" << hexfloat(d_p) << ";d_s=" << hexfloat(d_s)
       << ";kappa=" << hexfloat(kappa) << ";v_P=" << hexfloat(v_P) << ";v_E=" << hexfloat(v_E)
       << ";t_max=" << hexfloat(t_max) << ";fps=" << hexfloat(fps) << ";np=" << num_pursuers
       << ";ne=" << num_evaders << ";captor=" << deactivate_captor << ";obstacles=";
    for (auto c : obstacle_centers) os << hexfloat(c.x) << "," << hexfloat(c.y) << ";";
    return os.str();
  }
  std::uint64_t hash() const { return fnv1a(canonical()); }
};

enum class Team { pursuer, evader };

struct DroneState {
  int id = 0;
  Team team = Team::pursuer;
  Vec2 position;
  double heading = 0.0;  // [0, 2pi)
  bool active = true;
  Vec2 velocity;  // realized displacement / dt over the last tick

  friend bool operator==(const DroneState&, const DroneState&) = default;
};

struct WorldState {
  int tick = 0;
  std::vector<DroneState> drones;  // pursuers first, then evaders
  std::uint64_t config_hash = 0;
  Rng rng;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

// Heading command in [0, 1]; heading = 2pi * value.
class Action {
 public:
  Action() = default;
  explicit Action(double v) {
    require(std::isfinite(v), "action value must be finite");
    value_ = std::clamp(v, 0.0, 1.0);
  }
  double value() const { return value_; }
  double heading() const { return wrap_positive(kTwoPi * value_); }
  static Action from_heading(double theta) { return Action(wrap_positive(theta) / kTwoPi); }
  friend bool operator==(const Action&, const Action&) = default;

 private:
  double value_ = 0.0;
};

enum class TerminalReason { none, all_captured, timeout };

struct StepEvents {
  std::vector<std::pair<int, int>> captures;             // (pursuer, evader)
  std::vector<std::pair<int, int>> pursuer_collisions;   // (lower id, higher id)
  std::vector<int> obstacle_collisions;                   // drone ids, walls included
  bool terminal = false;
  TerminalReason terminal_reason = TerminalReason::none;

  bool any_pursuer_collision(int num_pursuers) const {
    if (!pursuer_collisions.empty()) return true;
    return std::any_of(obstacle_collisions.begin(), obstacle_collisions.end(),
                       [&](int id) { return id < num_pursuers; });
  }
  friend bool operator==(const StepEvents&, const StepEvents&) = default;
};

// Range/bearing to an entity in the observer's heading frame.
struct SlotView {
  double distance = 0.0;
  double bearing = 0.0;  // (-pi, pi], relative to observer heading
  bool active = false;
  bool visible = false;
  Vec2 velocity;  // entity velocity rotated into the observer frame; zero when not visible
};

struct RangeBearing {
  double distance = 0.0;
  double bearing = 0.0;
  bool visible = false;
};

struct Observation {
  int agent_id = 0;
  Team team = Team::pursuer;
  bool self_active = true;
  Vec2 self_position;  // divided by (w_b, h_b)
  double self_heading = 0.0;
  std::vector<SlotView> teammates;  // same team, id order, self excluded
  std::vector<SlotView> opponents;  // other team, id order (evaders for a pursuer)
  RangeBearing nearest_obstacle;
  RangeBearing nearest_wall;
  double perception_range = 0.0;  // sentinel distance of masked slots
};

class Arena {
 public:
  explicit Arena(ArenaConfig config) : config_(std::move(config)) {
    config_.validate();
    obstacles_ = config_.obstacles();
    hash_ = config_.hash();
  }

  const ArenaConfig& config() const { return config_; }
  std::uint64_t config_hash() const { return hash_; }
  const std::vector<Rect>& obstacles() const { return obstacles_; }
  int max_ticks() const { return config_.max_ticks(); }
  bool is_pursuer(int id) const { return id < config_.num_pursuers; }

  WorldState new_world(std::uint64_t seed) const {
    WorldState w;
    w.config_hash = hash_;
    w.rng.seed(seed);
    const int n = config_.num_drones();
    w.drones.reserve(n);
    int attempts = 0;
    for (int id = 0; id < n; ++id) {
      const bool pursuer = is_pursuer(id);
      const Rect spawn = pursuer ? config_.pursuer_spawn() : config_.evader_spawn();
      for (;;) {
        if (++attempts > kMaxSpawnAttempts) throw ConfigError("infeasible spawn: rejection sampling exhausted");
        const Vec2 p{uniform(w.rng, spawn.lo().x, spawn.hi().x), uniform(w.rng, spawn.lo().y, spawn.hi().y)};
        const bool clear = std::all_of(w.drones.begin(), w.drones.end(),
                                       [&](const DroneState& d) { return distance(d.position, p) >= config_.d_c; });
        if (!clear) continue;
        DroneState d;
        d.id = id;
        d.team = pursuer ? Team::pursuer : Team::evader;
        d.position = p;
        w.drones.push_back(d);
        break;
      }
    }
    for (auto& d : w.drones) d.heading = wrap_positive(kTwoPi * uniform01(w.rng));
    return w;
  }

  bool is_terminal(const WorldState& w) const {
    if (w.tick >= max_ticks()) return true;
    for (int i = config_.num_pursuers; i < config_.num_drones(); ++i)
      if (w.drones[i].active) return false;
    return true;
  }

  // Advances the world one tick in place.
  StepEvents advance(WorldState& w, std::span<const Action> actions) const {
    require(static_cast<int>(w.drones.size()) == config_.num_drones(), "world does not match arena");
    require(actions.size() == w.drones.size(), "expected one action per drone");
    require(!is_terminal(w), "cannot step a terminal world");
    const double dt = config_.dt();
    for (std::size_t i = 0; i < w.drones.size(); ++i) {
      auto& d = w.drones[i];
      if (!d.active) {
        d.velocity = {};
        continue;
      }
      const double speed = d.team == Team::pursuer ? config_.v_P : config_.v_E;
      d.heading = actions[i].heading();
      const Vec2 moved = d.position + Vec2::polar(speed * dt, d.heading);
      const Vec2 clamped{std::clamp(moved.x, 0.0, config_.w_b), std::clamp(moved.y, 0.0, config_.h_b)};
      d.velocity = (1.0 / dt) * (clamped - d.position);
      d.position = clamped;
    }

    StepEvents ev;
    resolve_captures(w, ev);

    const int np = config_.num_pursuers;
    for (int i = 0; i < np; ++i) {
      for (int j = i + 1; j < np; ++j) {
        const auto &a = w.drones[i], &b = w.drones[j];
        if (a.active && b.active && distance(a.position, b.position) < config_.kappa)
          ev.pursuer_collisions.emplace_back(i, j);
      }
    }
    for (const auto& d : w.drones) {
      if (d.active && clearance(d.position) < config_.d_s) ev.obstacle_collisions.push_back(d.id);
    }

    ++w.tick;
    bool evaders_left = false;
    for (int i = np; i < config_.num_drones(); ++i) evaders_left |= w.drones[i].active;
    if (!evaders_left) {
      ev.terminal = true;
      ev.terminal_reason = TerminalReason::all_captured;
    } else if (w.tick >= max_ticks()) {
      ev.terminal = true;
      ev.terminal_reason = TerminalReason::timeout;
    }
    return ev;
  }

  std::pair<WorldState, StepEvents> step(const WorldState& w, std::span<const Action> actions) const {
    WorldState next = w;
    StepEvents ev = advance(next, actions);
    return {std::move(next), std::move(ev)};
  }

  // Distance to the nearest obstacle or wall.
  double clearance(Vec2 p) const {
    double best = wall_distance(p).first;
    for (const auto& r : obstacles_) best = std::min(best, rect_distance(p, r));
    return best;
  }

  // Distance to the nearest wall and the absolute direction pointing at it.
  // Ties resolve in the order west, east, south, north.
  std::pair<double, double> wall_distance(Vec2 p) const {
    const std::array<std::pair<double, double>, 4> walls{{{p.x, kPi},
                                                         {config_.w_b - p.x, 0.0},
                                                         {p.y, 1.5 * kPi},
                                                         {config_.h_b - p.y, 0.5 * kPi}}};
    auto best = walls[0];
    for (const auto& w : walls)
      if (w.first < best.first) best = w;
    return best;
  }

  Observation observe(const WorldState& w, int agent_id) const {
    require(agent_id >= 0 && agent_id < static_cast<int>(w.drones.size()), "invalid agent id");
    const DroneState& self = w.drones[agent_id];
    Observation o;
    o.agent_id = agent_id;
    o.team = self.team;
    o.self_active = self.active;
    o.self_position = {self.position.x / config_.w_b, self.position.y / config_.h_b};
    o.self_heading = self.heading;
    const double range = config_.d_p;
    o.perception_range = range;

    for (const auto& other : w.drones) {
      if (other.id == agent_id) continue;
      SlotView s;
      s.active = other.active;
      const Vec2 rel = other.position - self.position;
      const double dist = rel.norm();
      if (dist <= range) {
        s.visible = true;
        s.distance = dist;
        s.bearing = dist > 0.0 ? wrap_signed(rel.angle() - self.heading) : 0.0;
        s.velocity = other.velocity.rotated(-self.heading);
      } else {
        s.distance = range;
      }
      (other.team == self.team ? o.teammates : o.opponents).push_back(s);
    }

    double best = std::numeric_limits<double>::infinity();
    double best_dir = 0.0;
    for (const auto& r : obstacles_) {
      const double dd = rect_distance(self.position, r);
      if (dd < best) {
        best = dd;
        const Vec2 target = dd > 0.0 ? closest_point(self.position, r) : r.center;
        const Vec2 rel = target - self.position;
        best_dir = rel.norm() > 0.0 ? rel.angle() : 0.0;
      }
    }
    if (best <= range) o.nearest_obstacle = {best, wrap_signed(best_dir - self.heading), true};
    else o.nearest_obstacle = {range, 0.0, false};

    const auto [wd, wdir] = wall_distance(self.position);
    if (wd <= range) o.nearest_wall = {wd, wrap_signed(wdir - self.heading), true};
    else o.nearest_wall = {range, 0.0, false};
    return o;
  }

  static constexpr int kMaxSpawnAttempts = 10000;

 private:
  // Pairs within capture distance are matched greedily by (distance, pursuer id,
  // evader id); each drone takes part in at most one capture per tick.
  void resolve_captures(WorldState& w, StepEvents& ev) const {
    struct Candidate {
      double dist;
      int p, e;
    };
    std::vector<Candidate> cands;
    const int np = config_.num_pursuers;
    for (int p = 0; p < np; ++p) {
      if (!w.drones[p].active) continue;
      for (int e = np; e < config_.num_drones(); ++e) {
        if (!w.drones[e].active) continue;
        const double dd = distance(w.drones[p].position, w.drones[e].position);
        if (dd < config_.d_c) cands.push_back({dd, p, e});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      if (a.p != b.p) return a.p < b.p;
      return a.e < b.e;
    });
    std::vector<bool> used(w.drones.size(), false);
    for (const auto& c : cands) {
      if (used[c.p] || used[c.e]) continue;
      used[c.p] = used[c.e] = true;
      ev.captures.emplace_back(c.p, c.e);
    }
    std::sort(ev.captures.begin(), ev.captures.end());
    for (auto [p, e] : ev.captures) {
      w.drones[e].active = false;
      w.drones[e].velocity = {};
      if (config_.deactivate_captor) {
        w.drones[p].active = false;
        w.drones[p].velocity = {};
      }
    }
  }

  ArenaConfig config_;
  std::vector<Rect> obstacles_;
  std::uint64_t hash_ = 0;
};

// One recorded tick. Record 0 holds the spawn poses with no actions.
struct TraceRecord {
  int tick = 0;
  std::vector<DroneState> poses;
  std::vector<double> actions;
  StepEvents events;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<TraceRecord> records;
};

inline bool same_pose(const DroneState& a, const DroneState& b) {
  return a.id == b.id && a.position == b.position && a.heading == b.heading && a.active == b.active;
}

// Re-simulates a trace from its seed and recorded actions. Returns the first tick
// whose poses or events differ from the recording, or nullopt if it matches.
inline std::optional<int> replay_divergence(const Arena& arena, const EpisodeTrace& trace) {
  if (trace.config_hash != arena.config_hash() || trace.records.empty()) return 0;
  WorldState w = arena.new_world(trace.seed);
  auto poses_match = [&](const TraceRecord& rec) {
    if (rec.poses.size() != w.drones.size()) return false;
    for (std::size_t i = 0; i < rec.poses.size(); ++i)
      if (!same_pose(rec.poses[i], w.drones[i])) return false;
    return true;
  };
  if (trace.records[0].tick != 0 || !poses_match(trace.records[0])) return 0;
  for (std::size_t r = 1; r < trace.records.size(); ++r) {
    const auto& rec = trace.records[r];
    if (arena.is_terminal(w) || rec.actions.size() != w.drones.size()) return rec.tick;
    std::vector<Action> acts;
    acts.reserve(rec.actions.size());
    for (double a : rec.actions) {
      if (!std::isfinite(a)) return rec.tick;
      acts.emplace_back(a);
    }
    const StepEvents ev = arena.advance(w, acts);
    if (rec.tick != w.tick || !poses_match(rec) || !(ev == rec.events)) return rec.tick;
  }
  return std::nullopt;
}

}  // namespace hola

#endif  // HOLA_ARENA_HPP
