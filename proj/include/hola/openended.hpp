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


#ifndef HOLA_OPENENDED_HPP
#define HOLA_OPENENDED_HPP

#include <chrono>
#include <climits>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hola/arena.hpp"
#include "hola/core.hpp"
#include "hola/episode.hpp"
#include "hola/hyfog.hpp"
#include "hola/myerson.hpp"
#include "hola/network.hpp"
#include "hola/policies.hpp"
#include "hola/ppo.hpp"
#include "json.hpp"

namespace hola {

enum class PhiMode { myerson, inverse_mean_reward };

inline std::string to_string(PhiMode m) { return m == PhiMode::myerson ? "myerson" : "inverse_mean_reward"; }

inline PhiMode phi_mode_from_name(const std::string& s) {
  if (s == "myerson") return PhiMode::myerson;
  if (s == "inverse_mean_reward") return PhiMode::inverse_mean_reward;
  throw ConfigError("unknown phi mode '" + s + "' (expected myerson or inverse_mean_reward)");
}

struct GenerationConfig {
  int edge_size = 3;
  int episodes_per_edge = 10;
  int acceptance_rank = 3;
  int max_graph_size = 10;
  int generations = 5;
  std::int64_t generation_steps = 20480;  // learner env steps per generation
  int acceptance_interval = 0;            // steps between acceptance checks; 0 means one PPO batch
  int population_size = 4;
  double alpha = 0.1;  // weight of the population-entropy bonus during pretraining
  int entropy_mc_samples = 1;
  PhiMode phi_mode = PhiMode::myerson;
  PhiShape phi_shape = PhiShape::reciprocal;
  double phi_epsilon = kPhiEpsilon;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const {
    std::vector<std::string> bad;
    if (edge_size < 2) bad.push_back("edge_size must be >= 2");
    // One slot is always kept free for the incoming learner.
    if (max_graph_size <= edge_size) bad.push_back("max_graph_size must exceed edge_size");
    if (acceptance_rank < 1) bad.push_back("acceptance_rank must be >= 1");
    if (population_size < edge_size) bad.push_back("population_size must be >= edge_size");
    if (episodes_per_edge < 1) bad.push_back("episodes_per_edge must be >= 1");
    if (generations < 0) bad.push_back("generations must be >= 0");
    if (generation_steps < 0) bad.push_back("generation_steps must be >= 0");
    if (acceptance_interval < 0) bad.push_back("acceptance_interval must be >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) bad.push_back("alpha must be in [0, 1]");
    if (entropy_mc_samples < 1) bad.push_back("entropy_mc_samples must be >= 1");
    if (!(phi_epsilon > 0.0)) bad.push_back("phi_epsilon must be positive");
    if (workers < 1) bad.push_back("workers must be >= 1");
    if (!bad.empty()) {
      std::string msg = "invalid generation config:";
      for (auto& b : bad) msg += " " + b + ";";
      throw ConfigError(msg);
    }
  }
};

// Everything one run needs, validated together.
class Lab {
 public:
  Lab(ArenaConfig arena, PolicyTuning tuning, TrainerConfig trainer, RewardConfig reward, GenerationConfig gen)
      : arena_((arena.validate(), std::move(arena))),
        tuning_(std::move(tuning)),
        trainer_(std::move(trainer)),
        reward_(reward),
        gen_(std::move(gen)) {
    trainer_.validate();
    gen_.validate();
    if (gen_.edge_size != arena_.config().num_pursuers)
      throw ConfigError("edge_size must equal num_pursuers (a hyperedge is one pursuer team)");
  }

  const Arena& arena() const { return arena_; }
  const PolicyTuning& tuning() const { return tuning_; }
  const TrainerConfig& trainer() const { return trainer_; }
  const RewardConfig& reward() const { return reward_; }
  const GenerationConfig& generation() const { return gen_; }
  RolloutContext rollout_context() const { return {&arena_, &tuning_, reward_}; }

  // Every hyperedge evaluation in a run replays the same episode seeds.
  std::uint64_t edge_root_seed() const { return derive_seed(gen_.seed, {0xED6Eu}); }

  PolicyParameters fresh_policy(std::uint64_t seed) const {
    return PolicyParameters::initialize(PolicyParameters::default_shape(feature_width(arena_.config())), seed);
  }

 private:
  Arena arena_;
  PolicyTuning tuning_;
  TrainerConfig trainer_;
  RewardConfig reward_;
  GenerationConfig gen_;
};

using Population = std::map<NodeId, PolicyParameters>;

inline std::map<NodeId, PolicyHandle> handles_for(const Population& pop) {
  std::map<NodeId, PolicyHandle> out;
  for (const auto& [id, p] : pop) out.emplace(id, PolicyHandle::parametric(p, "node_" + std::to_string(id)));
  return out;
}

// ---------------------------------------------------------------------------
// Grapher

inline double edge_weight_from_captures(std::span<const int> captures, int num_evaders) {
  require(!captures.empty(), "no episodes to average");
  require(num_evaders >= 1, "num_evaders must be >= 1");
  double s = 0.0;
  for (int c : captures) {
    require(c >= 0 && c <= num_evaders, "capture count out of range");
    s += static_cast<double>(c) / num_evaders;
  }
  return s / static_cast<double>(captures.size());
}

// Episode e uses seed derive(root_seed, e) whatever the team, so every
// hyperedge is scored on the same spawns.
inline double evaluate_hyperedge(const Lab& lab, const std::vector<PolicyHandle>& members, int episodes,
                                 std::uint64_t root_seed, int workers = 1) {
  require(episodes >= 1, "episodes must be >= 1");
  std::vector<int> captures(static_cast<std::size_t>(episodes));
  parallel_for(captures.size(), workers, [&](std::size_t e) {
    const auto r = run_episode(lab.arena(), lab.tuning(), members, PolicyHandle::evader(), derive_seed(root_seed, {e}));
    captures[e] = r.captures;
  });
  return edge_weight_from_captures(captures, lab.arena().config().num_evaders);
}

inline std::vector<PolicyHandle> team_of(const std::vector<NodeId>& sorted_ids,
                                         const std::map<NodeId, PolicyHandle>& handles) {
  std::vector<PolicyHandle> team;
  for (NodeId id : sorted_ids) {
    auto it = handles.find(id);
    require(it != handles.end(), "no policy for node " + std::to_string(id));
    team.push_back(it->second);
  }
  return team;
}

// All k-subsets of `ids` in lexicographic order.
inline std::vector<std::vector<NodeId>> subsets_of_size(const std::vector<NodeId>& ids, int k) {
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (static_cast<int>(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = from; i < ids.size(); ++i) {
      cur.push_back(ids[i]);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// Scores each member list and returns the weights in input order.
inline std::vector<double> evaluate_edges(const Lab& lab, const std::vector<std::vector<NodeId>>& edges,
                                          const std::map<NodeId, PolicyHandle>& handles) {
  std::vector<double> w(edges.size());
  const auto& gc = lab.generation();
  parallel_for(edges.size(), gc.workers, [&](std::size_t i) {
    w[i] = evaluate_hyperedge(lab, team_of(edges[i], handles), gc.episodes_per_edge, lab.edge_root_seed());
  });
  return w;
}

inline HyFoG complete_hypergraph(const Lab& lab, const std::map<NodeId, PolicyHandle>& handles) {
  const int l = lab.generation().edge_size;
  std::vector<NodeId> ids;
  for (const auto& [id, _] : handles) ids.push_back(id);
  require(static_cast<int>(ids.size()) >= l, "need at least edge_size policies");
  HyFoG g(l);
  for (NodeId id : ids) g.add_vertex(id);
  const auto edges = subsets_of_size(ids, l);
  const auto w = evaluate_edges(lab, edges, handles);
  for (std::size_t i = 0; i < edges.size(); ++i) g.add_edge(edges[i], w[i]);
  return g;
}

// Adds `learner` and one hyperedge per (l-1)-subset of the existing nodes.
inline HyFoG grapher_extend(const Lab& lab, const HyFoG& prev, NodeId learner,
                            const std::map<NodeId, PolicyHandle>& handles) {
  const int l = prev.edge_size();
  require(static_cast<int>(prev.num_vertices()) >= l - 1, "previous graph has fewer than l-1 nodes");
  require(!prev.has_vertex(learner), "learner is already in the graph");
  auto edges = subsets_of_size(prev.vertex_ids(), l - 1);
  for (auto& e : edges) {
    e.push_back(learner);
    std::sort(e.begin(), e.end());
  }
  const auto w = evaluate_edges(lab, edges, handles);
  HyFoG g = prev;
  g.add_vertex(learner);
  for (std::size_t i = 0; i < edges.size(); ++i) g.add_edge(edges[i], w[i]);
  return g;
}

// Shrinks to max_size - 1 nodes so the next learner fits. Nodes leave in
// order of the input graph's centrality (lowest eta, oldest first); eta is not
// recomputed between removals, so the top-ranked node always survives.
inline HyFoG prune_graph(const HyFoG& g, int max_size) {
  HyFoG out = g;
  const int excess = static_cast<int>(g.num_vertices()) - (max_size - 1);
  if (excess <= 0) return out;
  require(max_size - 1 >= g.edge_size(),
          "pruning to " + std::to_string(max_size - 1) + " nodes would leave fewer than edge_size nodes");
  const CentralityReport c = centrality_of(g);
  std::vector<NodeId> order = c.ranking;
  // ranking breaks eta ties newest-first, so the reversed list is oldest-first.
  std::reverse(order.begin(), order.end());
  for (int k = 0; k < excess; ++k) out.remove_vertex(order[static_cast<std::size_t>(k)]);
  if (auto bad = validate(out); !bad.empty()) throw ContractError("pruned graph is invalid: " + bad.front());
  return out;
}

// ---------------------------------------------------------------------------
// Teammate distribution

inline std::map<NodeId, double> mean_incident_weights(const HyFoG& g) {
  std::map<NodeId, double> out;
  for (NodeId id : g.vertex_ids()) {
    const auto inc = g.incident(id);
    double s = 0.0;
    for (const auto* e : inc) s += e->weight;
    out[id] = inc.empty() ? 0.0 : s / static_cast<double>(inc.size());
  }
  return out;
}

inline PhiDistribution compute_phi(const HyFoG& g, const GenerationConfig& gc) {
  if (gc.phi_mode == PhiMode::myerson) return phi_distribution(myerson_closed_form(g), gc.phi_epsilon, gc.phi_shape);
  return phi_distribution(mean_incident_weights(g), gc.phi_epsilon, gc.phi_shape);
}

// ---------------------------------------------------------------------------
// Records and run directory

struct TrainingSummary {
  int iterations = 0;
  std::int64_t env_steps = 0;
  int acceptance_checks = 0;
  double last_mean_return = 0.0;
  double last_success_rate = 0.0;
};

struct GenerationRecord {
  int generation = 0;
  NodeId node = 0;
  NodeId initialized_from = 0;
  bool accepted = false;
  int rank = 0;  // of the node on the archived trial graph
  int acceptance_rank = 0;
  std::string graph_hash;
  CentralityReport centrality;
  PhiDistribution phi;
  PhiMode phi_mode = PhiMode::myerson;
  TrainingSummary training;
  double wall_clock_seconds = 0.0;
};

inline nlohmann::json to_json(const GenerationRecord& r) {
  return {{"generation", r.generation},
          {"node", r.node},
          {"initialized_from", r.initialized_from},
          {"accepted", r.accepted},
          {"rank", r.rank},
          {"acceptance_rank", r.acceptance_rank},
          {"graph_hash", r.graph_hash},
          {"centrality", to_json(r.centrality)},
          {"phi", to_json(r.phi)},
          {"phi_mode", to_string(r.phi_mode)},
          {"training",
           {{"iterations", r.training.iterations},
            {"env_steps", r.training.env_steps},
            {"acceptance_checks", r.training.acceptance_checks},
            {"last_mean_return", r.training.last_mean_return},
            {"last_success_rate", r.training.last_success_rate}}},
          {"wall_clock_seconds", r.wall_clock_seconds}};
}

// Receives every PPO iteration: phase ("pretrain" or "oracle"), generation, node.
using IterationObserver = std::function<void(const std::string&, int, NodeId, const IterationLog&)>;

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FileError("cannot write " + path.string());
  os << text;
  if (!os) throw FileError("failed writing " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw FileError(path.string() + ": " + e.what());
  }
}

// Layout: config, nodes/node_<id>.ckpt, gen_<j>/{graph.json, phi.json,
// checkpoint, record.json}, metrics.csv. gen_0 holds the pretrained graph only.
class RunDir {
 public:
  RunDir(fs::path root, std::uint64_t config_hash) : root_(std::move(root)), config_hash_(config_hash) {
    fs::create_directories(root_ / "nodes");
  }

  const fs::path& root() const { return root_; }
  static fs::path generation_dir(const fs::path& root, int j) { return root / ("gen_" + std::to_string(j)); }
  static fs::path node_path(const fs::path& root, NodeId id) {
    return root / "nodes" / ("node_" + std::to_string(id) + ".ckpt");
  }

  void write_config(const std::string& text) const { write_text(root_ / "config", text); }

  void save_node(NodeId id, const PolicyParameters& p) const { save_checkpoint(node_path(root_, id).string(), p, config_hash_); }

  void save_graph(int j, const HyFoG& g) const {
    fs::create_directories(generation_dir(root_, j));
    write_text(generation_dir(root_, j) / "graph.json", to_json(g).dump(2) + "\n");
  }

  void save_generation(const GenerationRecord& r, const HyFoG& trial, const PolicyParameters& candidate) const {
    const auto dir = generation_dir(root_, r.generation);
    save_graph(r.generation, trial);
    write_text(dir / "phi.json", to_json(r.phi).dump(2) + "\n");
    save_checkpoint((dir / "checkpoint").string(), candidate, config_hash_);
    write_text(dir / "record.json", to_json(r).dump(2) + "\n");
  }

  void append_metrics(const std::string& phase, int generation, NodeId node, const IterationLog& log) const {
    const auto path = root_ / "metrics.csv";
    const bool fresh = !fs::exists(path);
    std::ofstream os(path, std::ios::app);
    if (!os) throw FileError("cannot append to " + path.string());
    if (fresh) os << "phase,generation,node," << kIterationCsvHeader << '\n';
    os << phase << ',' << generation << ',' << node << ',' << csv_row(log) << '\n';
  }

  IterationObserver observer() const {
    return [this](const std::string& phase, int j, NodeId id, const IterationLog& log) {
      append_metrics(phase, j, id, log);
    };
  }

 private:
  fs::path root_;
  std::uint64_t config_hash_;
};

inline HyFoG load_graph(const fs::path& root, int j) {
  const auto path = RunDir::generation_dir(root, j) / "graph.json";
  if (!fs::exists(path)) throw FileError("no graph snapshot for generation " + std::to_string(j) + " in " + root.string());
  return hyfog_from_json(read_json(path));
}

// Checkpoints for every vertex of `g`.
inline Population load_population(const fs::path& root, const HyFoG& g) {
  Population pop;
  for (NodeId id : g.vertex_ids()) pop.emplace(id, load_checkpoint(RunDir::node_path(root, id).string()).params);
  return pop;
}

// ---------------------------------------------------------------------------
// Pretraining

struct PretrainResult {
  Population population;
  HyFoG graph;
};

// Self-play for every policy in lockstep rounds. Each round snapshots the
// population first, so the entropy bonus and the outcome do not depend on the
// order in which policies are updated.
inline PretrainResult pretrain_population(const Lab& lab, const IterationObserver& observe = {}) {
  const auto& gc = lab.generation();
  const auto& tc = lab.trainer();
  const int n0 = gc.population_size;
  const int np = lab.arena().config().num_pursuers;
  std::vector<PpoTrainer> trainers;
  for (int i = 0; i < n0; ++i) {
    const auto ui = static_cast<std::uint64_t>(i);
    trainers.emplace_back(lab.fresh_policy(derive_seed(gc.seed, {0x9Eu, ui})), tc, derive_seed(gc.seed, {0x7Au, ui}));
  }
  std::vector<std::uint64_t> episode_counter(static_cast<std::size_t>(n0), 0);
  const auto ctx = lab.rollout_context();

  for (int round = 0;; ++round) {
    std::vector<int> quota(static_cast<std::size_t>(n0));
    bool any = false;
    for (int i = 0; i < n0; ++i) {
      const std::int64_t left = tc.total_env_steps - trainers[i].env_steps();
      quota[i] = static_cast<int>(std::min<std::int64_t>(tc.batch_size, std::max<std::int64_t>(left, 0)));
      any |= quota[i] > 0;
    }
    if (!any) break;
    const std::vector<PolicyParameters> snapshot = [&] {
      std::vector<PolicyParameters> s;
      for (const auto& t : trainers) s.push_back(t.params());
      return s;
    }();
    std::vector<const PolicyParameters*> mixture;
    for (const auto& p : snapshot) mixture.push_back(&p);
    std::vector<IterationLog> logs(static_cast<std::size_t>(n0));
    parallel_for(static_cast<std::size_t>(n0), gc.workers, [&](std::size_t i) {
      if (quota[i] == 0) return;
      const PolicyHandle self = PolicyHandle::parametric(snapshot[i], "node_" + std::to_string(i));
      EpisodeSource source = [&, self]() -> std::optional<EpisodeSpec> {
        const std::uint64_t k = episode_counter[i]++;
        return EpisodeSpec{std::vector<PolicyHandle>(static_cast<std::size_t>(np - 1), self),
                           derive_seed(gc.seed, {0x5E1Fu, i, k})};
      };
      BonusFn bonus;
      if (gc.alpha > 0.0)
        bonus = [&](std::span<const double> f, double u, Rng& rng) {
          return population_entropy_bonus(mixture, f, u, gc.entropy_mc_samples, rng, gc.alpha);
        };
      try {
        logs[i] = trainers[i].iterate(ctx, source, quota[i], bonus);
      } catch (const DivergenceError& e) {
        throw DivergenceError("pretraining policy " + std::to_string(i) + ", round " + std::to_string(round) + ": " +
                              e.what());
      }
    });
    if (observe)
      for (int i = 0; i < n0; ++i)
        if (quota[i] > 0) observe("pretrain", 0, i, logs[i]);
  }

  PretrainResult out;
  for (int i = 0; i < n0; ++i) out.population.emplace(i, trainers[i].params());
  out.graph = complete_hypergraph(lab, handles_for(out.population));
  if (auto bad = validate(out.graph); !bad.empty()) throw ContractError("pretrained graph is invalid: " + bad.front());
  return out;
}

// ---------------------------------------------------------------------------
// Oracle

struct OracleResult {
  PolicyParameters candidate;
  HyFoG trial_graph;  // g_j extended by the candidate
  GenerationRecord record;
};

// Trains a new node against teammates drawn from phi over g_j and stops as
// soon as the node ranks within the top acceptance_rank of its trial graph.
// When the budget runs out the best-ranked checkpoint comes back unaccepted.
inline OracleResult oracle_train(const Lab& lab, const HyFoG& g, const Population& pop, NodeId learner, int generation,
                                 const IterationObserver& observe = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  if (auto bad = validate(g); !bad.empty()) throw ContractError("oracle needs a valid graph: " + bad.front());
  require(!g.has_vertex(learner), "learner id already in the graph");
  const auto& gc = lab.generation();
  const auto& tc = lab.trainer();
  const int np = lab.arena().config().num_pursuers;
  const auto gen = static_cast<std::uint64_t>(generation);

  const CentralityReport start = centrality_of(g);
  const NodeId init = start.top();
  const PhiDistribution phi = compute_phi(g, gc);
  auto handles = handles_for(pop);
  std::erase_if(handles, [&](const auto& kv) { return !g.has_vertex(kv.first); });

  Rng pick(derive_seed(gc.seed, {0x7EA3u, gen}));
  std::uint64_t episode = 0;
  EpisodeSource source = [&]() -> std::optional<EpisodeSpec> {
    EpisodeSpec spec;
    for (NodeId id : sample_teammates(phi, np - 1, {learner}, pick)) spec.teammates.push_back(handles.at(id));
    spec.seed = derive_seed(gc.seed, {0xE915u, gen, episode++});
    return spec;
  };

  PpoTrainer trainer(pop.at(init), tc, derive_seed(gc.seed, {0x0AC1u, gen}));
  const std::int64_t interval = gc.acceptance_interval > 0 ? gc.acceptance_interval : tc.batch_size;

  struct Best {
    int rank = INT_MAX;
    PolicyParameters params;
    HyFoG graph;
    CentralityReport centrality;
  } best;
  TrainingSummary summary;
  bool accepted = false;

  auto check = [&] {
    auto h = handles;
    h.insert_or_assign(learner, PolicyHandle::parametric(trainer.params(), "node_" + std::to_string(learner)));
    HyFoG trial = grapher_extend(lab, g, learner, h);
    CentralityReport c = centrality_of(trial);
    const int rank = c.rank_of(learner);
    ++summary.acceptance_checks;
    if (rank < best.rank) best = {rank, trainer.params(), std::move(trial), std::move(c)};
    return rank <= gc.acceptance_rank;
  };

  std::int64_t since_check = 0;
  while (trainer.env_steps() < gc.generation_steps) {
    const int n = static_cast<int>(std::min<std::int64_t>(tc.batch_size, gc.generation_steps - trainer.env_steps()));
    IterationLog log;
    try {
      log = trainer.iterate(lab.rollout_context(), source, n);
    } catch (const DivergenceError& e) {
      throw DivergenceError("oracle, generation " + std::to_string(generation) + ": " + e.what());
    }
    if (observe) observe("oracle", generation, learner, log);
    summary.last_mean_return = log.mean_return;
    summary.last_success_rate = log.success_rate;
    since_check += n;
    if (since_check >= interval || trainer.env_steps() >= gc.generation_steps) {
      since_check = 0;
      if ((accepted = check())) break;
    }
  }
  if (summary.acceptance_checks == 0) accepted = check();
  summary.iterations = trainer.iterations();
  summary.env_steps = trainer.env_steps();

  OracleResult out;
  out.candidate = std::move(best.params);
  out.trial_graph = std::move(best.graph);
  auto& r = out.record;
  r.generation = generation;
  r.node = learner;
  r.initialized_from = init;
  r.accepted = accepted;
  r.rank = best.rank;
  r.acceptance_rank = gc.acceptance_rank;
  r.graph_hash = hyfog_hash(out.trial_graph);
  r.centrality = std::move(best.centrality);
  r.phi = phi;
  r.phi_mode = gc.phi_mode;
  r.training = summary;
  r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Generation loop

struct Archive {
  std::vector<GenerationRecord> records;
  HyFoG graph;
  Population population;
};

// Node ids continue after the largest id in `pop`. With a run directory every
// candidate, trial graph, phi and record is written as it is produced.
inline Archive generation_loop(const Lab& lab, Population pop, HyFoG g0, const RunDir* out = nullptr,
                               const IterationObserver& observe = {}) {
  const auto& gc = lab.generation();
  require(!pop.empty(), "population is empty");
  Archive ar;
  ar.graph = std::move(g0);
  NodeId next = pop.rbegin()->first + 1;
  for (int j = 1; j <= gc.generations; ++j) {
    const HyFoG pruned = prune_graph(ar.graph, gc.max_graph_size);
    OracleResult res = oracle_train(lab, pruned, pop, next, j, observe);
    pop.emplace(next, res.candidate);
    if (out) {
      out->save_node(next, res.candidate);
      out->save_generation(res.record, res.trial_graph, res.candidate);
    }
    ar.graph = std::move(res.trial_graph);
    ar.records.push_back(std::move(res.record));
    ++next;
  }
  ar.population = std::move(pop);
  return ar;
}

}  // namespace hola

#endif  // HOLA_OPENENDED_HPP
