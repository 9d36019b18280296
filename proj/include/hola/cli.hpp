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


#ifndef HOLA_CLI_HPP
#define HOLA_CLI_HPP

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hola/config.hpp"
#include "hola/harness.hpp"
#include "hola/openended.hpp"

namespace hola {

// A path to an existing checkpoint loads a parametric policy; anything else
// is a policy name (greedy, vicsek, d3qn_g:<i>, apf_a:<i>, ...).
inline PolicyHandle resolve_policy(const std::string& spec) {
  if (std::filesystem::is_regular_file(spec)) {
    auto ck = load_checkpoint(spec);
    return PolicyHandle::parametric(std::move(ck.params), spec);
  }
  return policy_from_name(spec);
}

inline int workers_from_env(int fallback) {
  const char* v = std::getenv("HOLA_WORKERS");
  if (!v || !*v) return fallback;
  int w = 0;
  if (!detail::parse_number(std::string(v), w) || w < 1) throw ConfigError("HOLA_WORKERS must be a positive integer");
  return w;
}

namespace cli {

struct Globals {
  std::string config = "default";
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::optional<int> workers;

  RunConfig load() const {
    RunConfig c = load_config(config);
    if (seed) c.generation.seed = *seed;
    c.generation.workers = workers_from_env(workers.value_or(c.generation.workers));
    c.lab();
    return c;
  }
};

inline int pretrain(const Globals& g, std::ostream& out) {
  const RunConfig cfg = g.load();
  const Lab lab = cfg.lab();
  RunDir run(g.out, lab.arena().config_hash());
  run.write_config(to_config_text(cfg));
  const auto res = pretrain_population(lab, run.observer());
  for (const auto& [id, p] : res.population) run.save_node(id, p);
  run.save_graph(0, res.graph);
  out << "pretrained " << res.population.size() << " policies; gen_0 graph has " << res.graph.edges().size()
      << " hyperedges (hash " << hyfog_hash(res.graph) << ")\n";
  return 0;
}

inline int evolve(const Globals& g, const std::string& from_arg, std::ostream& out) {
  const RunConfig cfg = g.load();
  const Lab lab = cfg.lab();
  const std::filesystem::path from = from_arg.empty() ? std::filesystem::path(g.out) : std::filesystem::path(from_arg);
  const HyFoG g0 = load_graph(from, 0);
  Population pop = load_population(from, g0);
  RunDir run(g.out, lab.arena().config_hash());
  run.write_config(to_config_text(cfg));
  if (std::filesystem::weakly_canonical(from) != std::filesystem::weakly_canonical(g.out)) {
    for (const auto& [id, p] : pop) run.save_node(id, p);
    run.save_graph(0, g0);
  }
  const auto ar = generation_loop(lab, std::move(pop), g0, &run, run.observer());
  for (const auto& r : ar.records)
    out << "generation " << r.generation << ": node " << r.node << " rank " << r.rank << " of "
        << r.centrality.ranking.size() << (r.accepted ? " accepted" : " not accepted") << " after "
        << r.training.env_steps << " steps\n";
  out << "final graph: " << ar.graph.num_vertices() << " nodes, " << ar.graph.edges().size() << " hyperedges\n";
  return 0;
}

struct EvalArgs {
  std::string learner;
  std::string pool = "heterogeneous";
  std::vector<std::string> members;
  int episodes = 50;
  std::vector<std::uint64_t> seeds;
};

inline int eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const RunConfig cfg = g.load();
  const Arena arena(cfg.arena);
  UnseenPool pool;
  std::vector<PolicyHandle> members;
  for (const auto& m : a.members) members.push_back(resolve_policy(m));
  if (a.pool == "heterogeneous") {
    if (!members.empty()) throw ConfigError("--members is only for homogeneous or custom pools");
    pool = UnseenPool::heterogeneous();
  } else if (a.pool == "homogeneous") {
    if (members.size() != 2) throw ConfigError("a homogeneous pool takes exactly two --members");
    pool = UnseenPool::homogeneous(members[0], members[1]);
  } else if (a.pool == "custom") {
    pool = UnseenPool::custom(members);
  } else {
    throw ConfigError("unknown pool '" + a.pool + "'");
  }
  std::vector<std::uint64_t> seeds = a.seeds;
  if (seeds.empty()) {
    const std::uint64_t s = cfg.generation.seed;
    seeds = {s, s + 1, s + 2};
  }
  const auto res =
      run_tournament(arena, cfg.tuning, resolve_policy(a.learner), pool, a.episodes, seeds, cfg.generation.workers);
  std::filesystem::create_directories(g.out);
  write_episode_table(std::filesystem::path(g.out) / "episodes.jsonl", res.episodes);
  write_text(std::filesystem::path(g.out) / "metrics.csv",
             std::string(kMetricsCsvHeader) + "\n" + csv_row(res.metrics) + "\n");
  const auto& m = res.metrics;
  out << "episodes " << m.episodes << " success_rate " << m.success_rate << " collision_rate " << m.collision_rate
      << " mean_episode_length " << m.mean_episode_length << '\n';
  return 0;
}

inline int bench_pool(const Globals& g, const std::vector<std::string>& policies, int episodes, std::ostream& out) {
  const RunConfig cfg = g.load();
  const Arena arena(cfg.arena);
  std::string csv = "policy,success_rate,mean_episode_length,episodes\n";
  for (const auto& name : policies) {
    const auto b = one_evader_sr_benchmark(arena, cfg.tuning, resolve_policy(name), episodes, cfg.generation.seed,
                                           cfg.generation.workers);
    char row[256];
    std::snprintf(row, sizeof row, "%s,%.6g,%.6g,%d\n", name.c_str(), b.success_rate, b.mean_episode_length, b.episodes);
    csv += row;
  }
  std::filesystem::create_directories(g.out);
  write_text(std::filesystem::path(g.out) / "bench.csv", csv);
  out << csv;
  return 0;
}

inline int simulate(const Globals& g, std::vector<std::string> team_names, std::ostream& out) {
  const RunConfig cfg = g.load();
  const Arena arena(cfg.arena);
  if (team_names.empty()) team_names.assign(static_cast<std::size_t>(cfg.arena.num_pursuers), "vicsek");
  std::vector<PolicyHandle> team;
  for (const auto& n : team_names) team.push_back(resolve_policy(n));
  if (static_cast<int>(team.size()) != cfg.arena.num_pursuers)
    throw ConfigError("--team needs " + std::to_string(cfg.arena.num_pursuers) + " policies");
  const auto r = run_episode(arena, cfg.tuning, team, PolicyHandle::evader(), cfg.generation.seed, true);
  std::filesystem::create_directories(g.out);
  const auto path = std::filesystem::path(g.out) / "trace.jsonl";
  write_trace(path, *r.trace);
  out << "seed " << r.seed << " length " << r.length << " captures " << r.captures << " success "
      << (r.all_captured ? 1 : 0) << " collision " << (r.collision ? 1 : 0) << " reason " << to_string(r.reason)
      << " trace " << path.string() << '\n';
  return 0;
}

inline int graph(const Globals& g, const std::string& run_dir, int generation, bool out_given, std::ostream& out) {
  const auto ex = export_graph(run_dir, generation, out_given ? std::filesystem::path(g.out) : std::filesystem::path(run_dir));
  out << ex.json.string() << '\n' << ex.dot.string() << '\n';
  return 0;
}

inline int replay(const Globals& g, const std::string& trace_path, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = g.load();
  const Arena arena(cfg.arena);
  const EpisodeTrace t = read_trace(trace_path);
  if (t.config_hash != arena.config_hash()) {
    err << "trace was recorded under a different arena config (hash " << hex64(t.config_hash) << ", expected "
        << hex64(arena.config_hash()) << ")\n";
    return 1;
  }
  if (const auto tick = replay_divergence(arena, t)) {
    err << "divergence at tick " << *tick << '\n';
    return 1;
  }
  out << "trace intact: " << (t.records.empty() ? 0 : t.records.back().tick) << " ticks\n";
  return 0;
}

}  // namespace cli

// Entry point behind the `hola` binary; `args` excludes the program name.
inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Open-ended pursuit-evasion teammate training", "hola"};
  app.require_subcommand(1);
  cli::Globals g;
  app.add_option("--config", g.config, "configuration file, or 'default'");
  app.add_option("--seed", g.seed, "overrides gen.seed");
  auto* out_opt = app.add_option("--out", g.out, "output directory");
  app.add_option("--workers", g.workers, "parallel workers (HOLA_WORKERS overrides)")->check(CLI::PositiveNumber);

  auto* pretrain = app.add_subcommand("pretrain", "train the initial population and its complete hypergraph");
  auto* evolve = app.add_subcommand("evolve", "run the generation loop from a pretrained run directory");
  std::string from;
  evolve->add_option("--from", from, "pretrained run directory (default: --out)");

  auto* eval = app.add_subcommand("eval", "evaluate a learner with partners drawn from an unseen pool");
  cli::EvalArgs ea;
  eval->add_option("--learner", ea.learner, "checkpoint path or policy name")->required();
  eval->add_option("--pool", ea.pool, "heterogeneous, homogeneous or custom")
      ->check(CLI::IsMember({"heterogeneous", "homogeneous", "custom"}));
  eval->add_option("--members", ea.members, "pool members (homogeneous or custom)")->delimiter(',');
  eval->add_option("--episodes", ea.episodes, "episodes per seed")->check(CLI::NonNegativeNumber);
  eval->add_option("--seeds", ea.seeds, "tournament seeds")->delimiter(',');

  auto* bench = app.add_subcommand("bench-pool", "one-evader success rate and episode length per policy");
  std::vector<std::string> bench_policies{"greedy", "vicsek", "d3qn_g:10", "d3qn_g:19"};
  int bench_episodes = 50;
  bench->add_option("--policies", bench_policies, "policies to benchmark")->delimiter(',');
  bench->add_option("--episodes", bench_episodes, "episodes per policy")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "play one episode and write its trace");
  std::vector<std::string> team;
  sim->add_option("--team", team, "pursuer policies in slot order")->delimiter(',');

  auto* graph = app.add_subcommand("graph", "export a generation's hypergraph and preference graph");
  std::string run_dir;
  int generation = -1;
  graph->add_option("--run", run_dir, "run directory")->required();
  graph->add_option("--generation", generation, "generation index")->required();

  auto* replay = app.add_subcommand("replay", "re-simulate a trace and report the first divergent tick");
  std::string trace;
  replay->add_option("trace", trace, "trace file")->required();

  for (auto* s : app.get_subcommands({})) s->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*pretrain) return cli::pretrain(g, out);
    if (*evolve) return cli::evolve(g, from, out);
    if (*eval) return cli::eval(g, ea, out);
    if (*bench) return cli::bench_pool(g, bench_policies, bench_episodes, out);
    if (*sim) return cli::simulate(g, team, out);
    if (*graph) return cli::graph(g, run_dir, generation, out_opt->count() > 0, out);
    if (*replay) return cli::replay(g, trace, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace hola

#endif  // HOLA_CLI_HPP
