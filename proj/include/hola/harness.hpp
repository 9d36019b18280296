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


#ifndef HOLA_HARNESS_HPP
#define HOLA_HARNESS_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hola/arena.hpp"
#include "hola/config.hpp"
#include "hola/episode.hpp"
#include "hola/hyfog.hpp"
#include "hola/openended.hpp"
#include "hola/policies.hpp"
#include "json.hpp"

namespace hola {

// ---------------------------------------------------------------------------
// Trace files: a header line, then one JSON object per tick.

inline const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::none: return "none";
    case TerminalReason::all_captured: return "all_captured";
    case TerminalReason::timeout: return "timeout";
  }
  return "?";
}

inline TerminalReason terminal_reason_from_name(const std::string& s) {
  if (s == "none") return TerminalReason::none;
  if (s == "all_captured") return TerminalReason::all_captured;
  if (s == "timeout") return TerminalReason::timeout;
  throw FileError("unknown terminal reason '" + s + "'");
}

inline nlohmann::json trace_record_json(const TraceRecord& r) {
  nlohmann::json poses = nlohmann::json::array();
  for (const auto& d : r.poses)
    poses.push_back({{"id", d.id},
                     {"team", d.team == Team::pursuer ? "pursuer" : "evader"},
                     {"x", d.position.x},
                     {"y", d.position.y},
                     {"heading", d.heading},
                     {"active", d.active}});
  nlohmann::json ev{{"captures", r.events.captures},
                    {"pursuer_collisions", r.events.pursuer_collisions},
                    {"obstacle_collisions", r.events.obstacle_collisions},
                    {"terminal", r.events.terminal},
                    {"reason", to_string(r.events.terminal_reason)}};
  return {{"tick", r.tick}, {"poses", poses}, {"actions", r.actions}, {"events", ev}};
}

inline TraceRecord trace_record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.tick = j.at("tick").get<int>();
  for (const auto& p : j.at("poses")) {
    DroneState d;
    d.id = p.at("id").get<int>();
    d.team = p.at("team").get<std::string>() == "pursuer" ? Team::pursuer : Team::evader;
    d.position = {p.at("x").get<double>(), p.at("y").get<double>()};
    d.heading = p.at("heading").get<double>();
    d.active = p.at("active").get<bool>();
    r.poses.push_back(d);
  }
  r.actions = j.at("actions").get<std::vector<double>>();
  const auto& ev = j.at("events");
  r.events.captures = ev.at("captures").get<std::vector<std::pair<int, int>>>();
  r.events.pursuer_collisions = ev.at("pursuer_collisions").get<std::vector<std::pair<int, int>>>();
  r.events.obstacle_collisions = ev.at("obstacle_collisions").get<std::vector<int>>();
  r.events.terminal = ev.at("terminal").get<bool>();
  r.events.terminal_reason = terminal_reason_from_name(ev.at("reason").get<std::string>());
  return r;
}

inline void write_trace(const std::filesystem::path& path, const EpisodeTrace& t) {
  std::ofstream os(path);
  if (!os) throw FileError("cannot write trace " + path.string());
  os << nlohmann::json{{"format", "hola-trace"}, {"version", 1}, {"seed", t.seed}, {"config_hash", hex64(t.config_hash)}}
            .dump()
     << '\n';
  for (const auto& r : t.records) os << trace_record_json(r).dump() << '\n';
  if (!os) throw FileError("failed writing trace " + path.string());
}

inline EpisodeTrace read_trace(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open trace " + path.string());
  EpisodeTrace t;
  std::string line;
  int line_no = 0;
  try {
    if (!std::getline(is, line)) throw FileError("empty trace");
    ++line_no;
    const auto head = nlohmann::json::parse(line);
    if (head.value("format", "") != "hola-trace" || head.value("version", 0) != 1)
      throw FileError("not a version-1 trace");
    t.seed = head.at("seed").get<std::uint64_t>();
    t.config_hash = std::stoull(head.at("config_hash").get<std::string>(), nullptr, 16);
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      t.records.push_back(trace_record_from_json(nlohmann::json::parse(line)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FileError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  } catch (const FileError& e) {
    throw FileError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Unseen partner pools

enum class PoolKind { homogeneous, heterogeneous, custom };

inline std::string to_string(PoolKind k) {
  switch (k) {
    case PoolKind::homogeneous: return "homogeneous";
    case PoolKind::heterogeneous: return "heterogeneous";
    case PoolKind::custom: return "custom";
  }
  return "?";
}

struct UnseenPool {
  PoolKind kind = PoolKind::heterogeneous;
  std::vector<PolicyHandle> members;

  void validate() const {
    if (members.size() < 2) throw ConfigError("an unseen pool needs at least two members");
  }

  // Two rule-based policies plus D3QN-G at two APF-A settings.
  static UnseenPool heterogeneous() {
    return {PoolKind::heterogeneous,
            {PolicyHandle::greedy(), PolicyHandle::vicsek(), PolicyHandle::d3qn_g(10), PolicyHandle::d3qn_g(19)}};
  }
  static UnseenPool homogeneous(PolicyHandle a, PolicyHandle b) { return {PoolKind::homogeneous, {std::move(a), std::move(b)}}; }
  static UnseenPool custom(std::vector<PolicyHandle> m) { return {PoolKind::custom, std::move(m)}; }

  // Homogeneous pools put one member in every teammate slot; the others draw
  // distinct members.
  std::vector<PolicyHandle> draw_team(int teammates, Rng& rng) const {
    std::vector<PolicyHandle> out;
    if (kind == PoolKind::homogeneous) {
      const auto& m = members[uniform_index(rng, members.size())];
      out.assign(static_cast<std::size_t>(teammates), m);
      return out;
    }
    require(static_cast<std::size_t>(teammates) <= members.size(), "pool too small for a team");
    std::vector<std::size_t> idx(members.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (int k = 0; k < teammates; ++k) {
      const std::size_t j = k + uniform_index(rng, idx.size() - k);
      std::swap(idx[k], idx[j]);
      out.push_back(members[idx[k]]);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Tournament

struct EpisodeRow {
  std::uint64_t seed = 0;  // tournament seed
  int episode = 0;
  std::uint64_t episode_seed = 0;
  std::vector<std::string> teammates;
  int captures = 0;
  bool success = false;
  bool collision = false;
  int length = 0;
  int pursuer_collisions = 0;
  int obstacle_collisions = 0;
  TerminalReason reason = TerminalReason::none;
  friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

struct Metrics {
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double mean_episode_length = 0.0;
  int episodes = 0;
  std::vector<std::uint64_t> seeds;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct TournamentResult {
  Metrics metrics;
  std::vector<EpisodeRow> episodes;  // (seed, episode) order
};

inline Metrics metrics_from_rows(const std::vector<EpisodeRow>& rows) {
  Metrics m;
  for (const auto& r : rows) {
    if (m.seeds.empty() || m.seeds.back() != r.seed) m.seeds.push_back(r.seed);
    m.success_rate += r.success ? 1.0 : 0.0;
    m.collision_rate += r.collision ? 1.0 : 0.0;
    m.mean_episode_length += r.length;
  }
  m.episodes = static_cast<int>(rows.size());
  if (m.episodes > 0) {
    m.success_rate /= m.episodes;
    m.collision_rate /= m.episodes;
    m.mean_episode_length /= m.episodes;
  }
  return m;
}

// The learner takes pursuer slot 0; the other slots come from the pool, drawn
// afresh for every episode.
inline TournamentResult run_tournament(const Arena& arena, const PolicyTuning& tuning, const PolicyHandle& learner,
                                       const UnseenPool& pool, int episodes_per_seed,
                                       const std::vector<std::uint64_t>& seeds, int workers = 1) {
  pool.validate();
  require(episodes_per_seed >= 0, "episodes_per_seed must be >= 0");
  const int np = arena.config().num_pursuers;
  const std::size_t per = static_cast<std::size_t>(episodes_per_seed);
  TournamentResult out;
  out.episodes.resize(seeds.size() * per);
  parallel_for(out.episodes.size(), workers, [&](std::size_t k) {
    const std::uint64_t seed = seeds[k / per];
    const std::uint64_t e = k % per;
    Rng pick(derive_seed(seed, {0x7EA3u, e}));
    std::vector<PolicyHandle> team{learner};
    for (auto& h : pool.draw_team(np - 1, pick)) team.push_back(std::move(h));
    EpisodeRow row;
    row.seed = seed;
    row.episode = static_cast<int>(e);
    row.episode_seed = derive_seed(seed, {0xE915u, e});
    for (std::size_t i = 1; i < team.size(); ++i) row.teammates.push_back(team[i].id);
    const auto r = run_episode(arena, tuning, team, PolicyHandle::evader(), row.episode_seed);
    row.captures = r.captures;
    row.success = r.all_captured;
    row.collision = r.collision;
    row.length = r.length;
    row.pursuer_collisions = r.pursuer_collision_events;
    row.obstacle_collisions = r.obstacle_collision_events;
    row.reason = r.reason;
    out.episodes[k] = std::move(row);
  });
  out.metrics = metrics_from_rows(out.episodes);
  return out;
}

inline nlohmann::json to_json(const EpisodeRow& r) {
  return {{"seed", r.seed},
          {"episode", r.episode},
          {"episode_seed", r.episode_seed},
          {"teammates", r.teammates},
          {"captures", r.captures},
          {"success", r.success},
          {"collision", r.collision},
          {"length", r.length},
          {"pursuer_collisions", r.pursuer_collisions},
          {"obstacle_collisions", r.obstacle_collisions},
          {"reason", to_string(r.reason)}};
}

inline EpisodeRow episode_row_from_json(const nlohmann::json& j) {
  EpisodeRow r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.episode = j.at("episode").get<int>();
  r.episode_seed = j.at("episode_seed").get<std::uint64_t>();
  r.teammates = j.at("teammates").get<std::vector<std::string>>();
  r.captures = j.at("captures").get<int>();
  r.success = j.at("success").get<bool>();
  r.collision = j.at("collision").get<bool>();
  r.length = j.at("length").get<int>();
  r.pursuer_collisions = j.at("pursuer_collisions").get<int>();
  r.obstacle_collisions = j.at("obstacle_collisions").get<int>();
  r.reason = terminal_reason_from_name(j.at("reason").get<std::string>());
  return r;
}

inline void write_episode_table(const std::filesystem::path& path, const std::vector<EpisodeRow>& rows) {
  std::ofstream os(path);
  if (!os) throw FileError("cannot write " + path.string());
  for (const auto& r : rows) os << to_json(r).dump() << '\n';
}

inline std::vector<EpisodeRow> read_episode_table(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open " + path.string());
  std::vector<EpisodeRow> rows;
  std::string line;
  try {
    while (std::getline(is, line))
      if (!line.empty()) rows.push_back(episode_row_from_json(nlohmann::json::parse(line)));
  } catch (const nlohmann::json::exception& e) {
    throw FileError(path.string() + ": " + e.what());
  }
  return rows;
}

inline const char* kMetricsCsvHeader = "success_rate,collision_rate,mean_episode_length,episodes,seeds";

inline std::string csv_row(const Metrics& m) {
  std::string seeds;
  for (auto s : m.seeds) seeds += (seeds.empty() ? "" : " ") + std::to_string(s);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,", m.success_rate, m.collision_rate, m.mean_episode_length,
                m.episodes);
  return buf + seeds;
}

// ---------------------------------------------------------------------------
// One-evader benchmark for characterizing pool members

struct BenchResult {
  double success_rate = 0.0;  // episodes with at least one capture
  double mean_episode_length = 0.0;
  int episodes = 0;
};

inline BenchResult one_evader_sr_benchmark(const Arena& arena, const PolicyTuning& tuning, const PolicyHandle& member,
                                           int episodes, std::uint64_t seed, int workers = 1) {
  require(episodes >= 1, "episodes must be >= 1");
  const std::vector<PolicyHandle> team(static_cast<std::size_t>(arena.config().num_pursuers), member);
  std::vector<EpisodeResult> res(static_cast<std::size_t>(episodes));
  parallel_for(res.size(), workers, [&](std::size_t e) {
    res[e] = run_episode(arena, tuning, team, PolicyHandle::evader(), derive_seed(seed, {0xBE7Cu, e}));
  });
  BenchResult b;
  b.episodes = episodes;
  for (const auto& r : res) {
    b.success_rate += r.captures >= 1 ? 1.0 : 0.0;
    b.mean_episode_length += r.length;
  }
  b.success_rate /= episodes;
  b.mean_episode_length /= episodes;
  return b;
}

// ---------------------------------------------------------------------------
// Graph export

struct GraphExport {
  std::filesystem::path json;
  std::filesystem::path dot;
};

// Writes graph_<j>.json (hypergraph, preference graph, centrality) and
// graph_<j>.dot (preference arcs with eta labels) into `out_dir`.
inline GraphExport export_graph(const std::filesystem::path& run_dir, int generation,
                                const std::filesystem::path& out_dir) {
  if (generation < 0) throw FileError("generation index must be >= 0");
  const HyFoG g = load_graph(run_dir, generation);
  const auto pg = build_preference_hypergraph(g);
  const auto c = hyper_preference_centrality(pg);
  std::filesystem::create_directories(out_dir);
  GraphExport ex{out_dir / ("graph_" + std::to_string(generation) + ".json"),
                 out_dir / ("graph_" + std::to_string(generation) + ".dot")};
  const nlohmann::json j{{"hyfog", to_json(g)}, {"preference", to_json(pg)}, {"centrality", to_json(c)}};
  write_text(ex.json, j.dump(2) + "\n");
  write_text(ex.dot, to_dot(pg, c));
  return ex;
}

}  // namespace hola

#endif  // HOLA_HARNESS_HPP
