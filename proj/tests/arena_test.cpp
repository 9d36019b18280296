#include <gtest/gtest.h>

#include "hola/arena.hpp"
#include "hola/episode.hpp"

namespace hola {
namespace {

const Arena& arena() {
  static const Arena a(ArenaConfig::defaults());
  return a;
}

// Spawn world with hand-placed drones. Unlisted drones are parked far apart
// near the middle of the arena where they touch nothing.
WorldState scene(const std::vector<std::pair<int, Vec2>>& placed) {
  WorldState w = arena().new_world(1);
  const Vec2 parking[] = {{0.3, 0.9}, {1.6, 0.6}, {2.9, 0.9}, {0.3, 2.5}, {3.3, 2.5}};
  for (auto& d : w.drones) {
    d.position = parking[d.id];
    d.heading = 0.0;
  }
  for (auto [id, p] : placed) w.drones[id].position = p;
  return w;
}

std::vector<Action> still() { return std::vector<Action>(5, Action(0.25)); }

TEST(Geometry, RectDistance) {
  const Rect r = Rect::from_bounds({1, 0}, {2, 1});
  EXPECT_DOUBLE_EQ(rect_distance({0, 0}, r), 1.0);
  EXPECT_EQ(rect_distance({1.5, 0.5}, r), 0.0);
  EXPECT_DOUBLE_EQ(rect_distance({2, 3}, Rect::from_bounds({0, 0}, {1, 1})), std::sqrt(5.0));
}

TEST(Config, DefaultsAreValid) {
  const auto& c = arena().config();
  EXPECT_EQ(c.max_ticks(), 1000);
  EXPECT_EQ(c.obstacle_centers.size(), 5u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsBadValues) {
  auto c = ArenaConfig::defaults();
  c.d_c = 0.0;
  EXPECT_THROW(Arena{c}, ConfigError);
  c = ArenaConfig::defaults();
  c.v_P = 0.7;
  EXPECT_THROW(Arena{c}, ConfigError);
  c = ArenaConfig::defaults();
  c.obstacle_centers.push_back({1.8, 0.3});  // inside the pursuer band
  EXPECT_THROW(Arena{c}, ConfigError);
  c = ArenaConfig::defaults();
  c.fps = 10.5;
  c.t_max = 0.1;
  EXPECT_THROW(Arena{c}, ConfigError);
}

TEST(Config, HashTracksEveryField) {
  auto c = ArenaConfig::defaults();
  const auto h = c.hash();
  c.kappa = std::nextafter(c.kappa, 1.0);
  EXPECT_NE(c.hash(), h);
  c = ArenaConfig::defaults();
  c.obstacle_centers[4].x += 0.01;
  EXPECT_NE(c.hash(), h);
}

TEST(Spawn, DeterministicInSeed) {
  EXPECT_EQ(arena().new_world(7), arena().new_world(7));
  EXPECT_NE(arena().new_world(7), arena().new_world(8));
}

TEST(Spawn, InsideBandsAndSeparated) {
  const auto& c = arena().config();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const WorldState w = arena().new_world(seed);
    ASSERT_EQ(w.drones.size(), 5u);
    for (const auto& d : w.drones) {
      const Rect band = d.team == Team::pursuer ? c.pursuer_spawn() : c.evader_spawn();
      EXPECT_TRUE(band.contains(d.position));
      EXPECT_GE(d.heading, 0.0);
      EXPECT_LT(d.heading, kTwoPi);
      EXPECT_TRUE(d.active);
    }
    for (int i = 0; i < 3; ++i) EXPECT_LE(w.drones[i].position.y, 0.6);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) EXPECT_GE(distance(w.drones[i].position, w.drones[j].position), c.d_c);
  }
}

TEST(Spawn, InfeasibleBandThrows) {
  auto c = ArenaConfig::defaults();
  c.w_s = 0.1;
  c.h_s = 0.1;
  Arena tight(c);
  EXPECT_THROW(tight.new_world(1), ConfigError);
}

TEST(Step, DisplacementIsSpeedTimesDt) {
  WorldState w = scene({{0, {1.0, 1.0}}});
  std::vector<Action> a = still();
  a[0] = Action(0.0);
  arena().advance(w, a);
  EXPECT_DOUBLE_EQ(w.drones[0].position.x, 1.03);
  EXPECT_DOUBLE_EQ(w.drones[0].position.y, 1.0);
  EXPECT_EQ(w.tick, 1);
}

// still() moves every drone north: pursuers by 0.03 m, evaders by 0.06 m.
TEST(Step, CaptureBelowThreshold) {
  WorldState w = scene({{0, {1.0, 1.0}}, {3, {1.0, 1.12}}});
  auto ev = arena().advance(w, still());
  EXPECT_NEAR(distance(w.drones[0].position, w.drones[3].position), 0.15, 1e-12);
  ASSERT_EQ(ev.captures.size(), 1u);
  EXPECT_EQ(ev.captures[0], std::make_pair(0, 3));
  EXPECT_FALSE(w.drones[3].active);
  EXPECT_FALSE(w.drones[0].active);
}

TEST(Step, NoCaptureAtQuarterMetre) {
  WorldState w = scene({{0, {1.0, 1.0}}, {3, {1.0, 1.22}}});
  auto ev = arena().advance(w, still());
  EXPECT_NEAR(distance(w.drones[0].position, w.drones[3].position), 0.25, 1e-12);
  EXPECT_TRUE(ev.captures.empty());
}

TEST(Step, CaptorCanStayActive) {
  auto c = ArenaConfig::defaults();
  c.deactivate_captor = false;
  Arena keep(c);
  WorldState w = scene({{0, {1.0, 1.0}}, {3, {1.0, 1.12}}});
  w.config_hash = keep.config_hash();
  auto ev = keep.advance(w, still());
  ASSERT_EQ(ev.captures.size(), 1u);
  EXPECT_TRUE(w.drones[0].active);
  EXPECT_FALSE(w.drones[3].active);
}

TEST(Step, NearerEvaderIsCaptured) {
  WorldState w = scene({{0, {1.0, 1.0}}, {3, {1.12, 0.97}}, {4, {0.9, 0.97}}});
  auto ev = arena().advance(w, still());
  ASSERT_EQ(ev.captures.size(), 1u);
  EXPECT_EQ(ev.captures[0], std::make_pair(0, 4));
  EXPECT_TRUE(w.drones[3].active);
}

TEST(Step, PursuerCollisionAtEighteenCentimetres) {
  WorldState w = scene({{0, {1.0, 1.0}}, {1, {1.18, 1.0}}});
  auto ev = arena().advance(w, still());
  ASSERT_EQ(ev.pursuer_collisions.size(), 1u);
  EXPECT_EQ(ev.pursuer_collisions[0], std::make_pair(0, 1));

  WorldState far = scene({{0, {1.0, 1.0}}, {1, {1.21, 1.0}}});
  EXPECT_TRUE(arena().advance(far, still()).pursuer_collisions.empty());
}

TEST(Step, ObstacleAndWallProximity) {
  // Obstacle (1.8, 1.8) spans y in [1.75, 1.85]; moving north brings a drone
  // from 0.13 m to 0.10 m below it, which is not yet a collision.
  WorldState w = scene({{1, {1.8, 1.59}}});
  auto ev = arena().advance(w, still());
  EXPECT_TRUE(ev.obstacle_collisions.empty());
  ev = arena().advance(w, still());
  ASSERT_EQ(ev.obstacle_collisions, std::vector<int>{1});

  WorldState wall = scene({{2, {0.05, 1.0}}});
  std::vector<Action> a = still();
  a[2] = Action(0.25);
  ev = arena().advance(wall, a);
  EXPECT_EQ(ev.obstacle_collisions, std::vector<int>{2});
  EXPECT_TRUE(ev.any_pursuer_collision(3));
}

TEST(Step, ClampsToBoundary) {
  WorldState w = scene({{0, {0.01, 1.0}}});
  std::vector<Action> a = still();
  a[0] = Action(0.5);
  arena().advance(w, a);
  EXPECT_EQ(w.drones[0].position.x, 0.0);
  EXPECT_EQ(w.drones[0].position.y, 1.0);
}

TEST(Step, TimeoutAtTickLimit) {
  WorldState w = scene({});
  w.tick = 999;
  auto ev = arena().advance(w, still());
  EXPECT_TRUE(ev.terminal);
  EXPECT_EQ(ev.terminal_reason, TerminalReason::timeout);
  EXPECT_EQ(w.tick, 1000);
  EXPECT_THROW(arena().advance(w, still()), ContractError);
}

TEST(Step, ContractErrors) {
  WorldState w = scene({});
  std::vector<Action> short_list(4, Action(0.0));
  EXPECT_THROW(arena().advance(w, short_list), ContractError);
  EXPECT_THROW(Action(std::nan("")), ContractError);
  EXPECT_EQ(Action(1.7).value(), 1.0);
  EXPECT_EQ(Action(-2.0).value(), 0.0);
}

TEST(Step, InactiveDronesStayPut) {
  WorldState w = scene({});
  w.drones[2].active = false;
  const Vec2 before = w.drones[2].position;
  for (int k = 0; k < 10; ++k) arena().advance(w, still());
  EXPECT_EQ(w.drones[2].position, before);
}

TEST(Step, AllCapturedTerminates) {
  WorldState w = scene({});
  w.drones[3].active = false;
  w.drones[4].position = {1.0, 1.1};
  w.drones[0].position = {1.0, 1.0};
  std::vector<Action> a = still();
  auto ev = arena().advance(w, a);
  EXPECT_TRUE(ev.terminal);
  EXPECT_EQ(ev.terminal_reason, TerminalReason::all_captured);
}

TEST(Observe, MasksBeyondPerceptionRange) {
  WorldState w = scene({{0, {1.0, 1.0}}, {3, {1.0, 3.5}}});
  const Observation o = arena().observe(w, 0);
  ASSERT_EQ(o.opponents.size(), 2u);
  EXPECT_FALSE(o.opponents[0].visible);
  EXPECT_EQ(o.opponents[0].distance, 2.0);
  EXPECT_EQ(o.opponents[0].bearing, 0.0);
  EXPECT_TRUE(o.opponents[0].active);
}

TEST(Observe, TeammateDueEast) {
  WorldState w = scene({{0, {1.0, 1.0}}, {1, {2.0, 1.0}}});
  const Observation o = arena().observe(w, 0);
  ASSERT_EQ(o.teammates.size(), 2u);
  EXPECT_DOUBLE_EQ(o.teammates[0].distance, 1.0);
  EXPECT_DOUBLE_EQ(o.teammates[0].bearing, 0.0);
  EXPECT_TRUE(o.teammates[0].visible);
}

TEST(Observe, WestWall) {
  WorldState w = scene({{0, {0.05, 1.0}}});
  const Observation o = arena().observe(w, 0);
  EXPECT_DOUBLE_EQ(o.nearest_wall.distance, 0.05);
  EXPECT_DOUBLE_EQ(o.nearest_wall.bearing, kPi);
  EXPECT_THROW(arena().observe(w, 5), ContractError);
}

TEST(Observe, BearingIsRelativeToHeading) {
  WorldState w = scene({{0, {1.0, 1.0}}, {1, {1.0, 1.5}}});
  w.drones[0].heading = kPi / 2;
  const Observation o = arena().observe(w, 0);
  EXPECT_NEAR(o.teammates[0].bearing, 0.0, 1e-12);
  EXPECT_NEAR(o.nearest_obstacle.distance, 0.75, 1e-12);
  EXPECT_NEAR(o.nearest_obstacle.bearing, 0.0, 1e-12);
}

// Random actions for every drone; checks the per-tick kinematic invariants.
TEST(Properties, RandomRollouts) {
  const auto& c = arena().config();
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    WorldState w = arena().new_world(seed);
    Rng rng(seed + 100);
    while (!arena().is_terminal(w)) {
      std::vector<Action> a;
      for (int i = 0; i < 5; ++i) a.emplace_back(uniform01(rng));
      const WorldState before = w;
      const auto ev = arena().advance(w, a);
      for (int i = 0; i < 5; ++i) {
        const auto &b = before.drones[i], &d = w.drones[i];
        const double speed = d.team == Team::pursuer ? c.v_P : c.v_E;
        EXPECT_TRUE(c.boundary().contains(d.position));
        EXPECT_LE(distance(b.position, d.position), speed * c.dt() + 1e-12);
        if (!b.active) {
          EXPECT_FALSE(d.active);
          EXPECT_EQ(b.position, d.position);
        }
        if (b.active) {
          const Vec2 free = b.position + Vec2::polar(speed * c.dt(), a[i].heading());
          if (c.boundary().contains(free)) {
            EXPECT_NEAR(distance(b.position, d.position), speed * c.dt(), 1e-12);
          }
        }
      }
      for (auto [p, e] : ev.captures) EXPECT_LT(distance(w.drones[p].position, w.drones[e].position), c.d_c);
    }
    EXPECT_LE(w.tick, 1000);
  }
}

TEST(Trace, ReplayIsBitExact) {
  const auto tuning = PolicyTuning::for_arena(arena().config());
  const std::vector<PolicyHandle> team{PolicyHandle::greedy(), PolicyHandle::vicsek(), PolicyHandle::d3qn_g()};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = run_episode(arena(), tuning, team, PolicyHandle::evader(), seed, true);
    ASSERT_TRUE(r.trace);
    EXPECT_EQ(static_cast<int>(r.trace->records.size()), r.length + 1);
    EXPECT_EQ(replay_divergence(arena(), *r.trace), std::nullopt);
  }
}

TEST(Trace, TamperedPoseIsReported) {
  const auto tuning = PolicyTuning::for_arena(arena().config());
  auto r = run_episode(arena(), tuning, {PolicyHandle::vicsek(), PolicyHandle::vicsek(), PolicyHandle::vicsek()},
                       PolicyHandle::evader(), 3, true);
  auto trace = *r.trace;
  trace.records[57].poses[1].position.x = std::nextafter(trace.records[57].poses[1].position.x, 10.0);
  EXPECT_EQ(replay_divergence(arena(), trace), 57);
  auto acted = *r.trace;
  acted.records[12].actions[4] += 0.25;
  EXPECT_EQ(replay_divergence(arena(), acted), 12);
}

}  // namespace
}  // namespace hola
