#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include <unistd.h>

#include "hola/openended.hpp"

using namespace hola;
namespace fs = std::filesystem;

namespace {

GenerationConfig tiny_generation() {
  GenerationConfig g;
  g.episodes_per_edge = 2;
  g.generations = 2;
  g.generation_steps = 128;
  g.population_size = 4;
  g.max_graph_size = 5;
  g.seed = 11;
  return g;
}

TrainerConfig tiny_trainer() {
  TrainerConfig t;
  t.batch_size = 64;
  t.minibatch_size = 32;
  t.epochs = 2;
  t.total_env_steps = 128;
  return t;
}

Lab make_lab(GenerationConfig g = tiny_generation(), TrainerConfig t = tiny_trainer()) {
  const auto a = ArenaConfig::defaults();
  return Lab(a, PolicyTuning::for_arena(a), t, RewardConfig{}, g);
}

PolicyHandle idle_handle(const Lab& lab) {
  auto p = lab.fresh_policy(1);
  std::fill(p.values.begin(), p.values.end(), 0.0);
  p.values[p.values.size() - 3] = -40.0;
  p.values[p.values.size() - 2] = -50.0;
  return PolicyHandle::parametric(p, "idle");
}

// Rule-based stand-ins so graph tests do not need trained policies.
std::map<NodeId, PolicyHandle> rule_handles(int n) {
  std::map<NodeId, PolicyHandle> h;
  for (int i = 0; i < n; ++i) {
    switch (i % 4) {
      case 0: h.emplace(i, PolicyHandle::greedy()); break;
      case 1: h.emplace(i, PolicyHandle::vicsek()); break;
      case 2: h.emplace(i, PolicyHandle::d3qn_g(10)); break;
      default: h.emplace(i, PolicyHandle::d3qn_g(19)); break;
    }
  }
  return h;
}

HyFoG worked_example() {
  HyFoG g(3);
  for (int i = 1; i <= 4; ++i) g.add_vertex(i);
  g.add_edge({1, 2, 3}, 5);
  g.add_edge({1, 2, 4}, 3);
  g.add_edge({1, 3, 4}, 2);
  g.add_edge({2, 3, 4}, 4);
  return g;
}

HyFoG random_complete(int n, int l, Rng& rng) {
  HyFoG g(l);
  std::vector<NodeId> ids;
  for (int i = 0; i < n; ++i) {
    g.add_vertex(i);
    ids.push_back(i);
  }
  for (auto& e : subsets_of_size(ids, l)) g.add_edge(e, uniform01(rng));
  return g;
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hola_oe_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

long binom(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST(GenerationConfigTest, DefaultsAreValid) {
  GenerationConfig g;
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.edge_size, 3);
  EXPECT_EQ(g.episodes_per_edge, 10);
  EXPECT_EQ(g.acceptance_rank, 3);
  EXPECT_EQ(g.max_graph_size, 10);
  EXPECT_EQ(g.population_size, 4);
}

TEST(GenerationConfigTest, RejectsBrokenInvariants) {
  auto expect_bad = [](auto mutate) {
    GenerationConfig g;
    mutate(g);
    EXPECT_THROW(g.validate(), ConfigError);
  };
  expect_bad([](GenerationConfig& g) { g.edge_size = 1; });
  expect_bad([](GenerationConfig& g) { g.max_graph_size = 3; });
  expect_bad([](GenerationConfig& g) { g.acceptance_rank = 0; });
  expect_bad([](GenerationConfig& g) { g.population_size = 2; });
  expect_bad([](GenerationConfig& g) { g.alpha = 1.5; });
  expect_bad([](GenerationConfig& g) { g.phi_epsilon = 0.0; });
  expect_bad([](GenerationConfig& g) { g.workers = 0; });
}

TEST(GenerationConfigTest, EdgeSizeMustMatchTeam) {
  auto g = tiny_generation();
  g.edge_size = 2;
  g.population_size = 2;
  EXPECT_THROW(make_lab(g), ConfigError);
}

TEST(GenerationConfigTest, PhiModeNames) {
  EXPECT_EQ(phi_mode_from_name("myerson"), PhiMode::myerson);
  EXPECT_EQ(phi_mode_from_name("inverse_mean_reward"), PhiMode::inverse_mean_reward);
  EXPECT_THROW(phi_mode_from_name("shapley"), ConfigError);
}

TEST(Grapher, WeightIsMeanCaptureFraction) {
  const std::vector<int> caps{2, 2, 1, 2, 0, 2, 2, 1, 2, 2};
  EXPECT_NEAR(edge_weight_from_captures(caps, 2), 0.8, 1e-12);
  EXPECT_EQ(edge_weight_from_captures(std::vector<int>{0, 0, 0}, 2), 0.0);
  EXPECT_EQ(edge_weight_from_captures(std::vector<int>{2, 2}, 2), 1.0);
  EXPECT_THROW(edge_weight_from_captures(std::vector<int>{3}, 2), ContractError);
}

TEST(Grapher, IdleTeamScoresZero) {
  const Lab lab = make_lab();
  const auto h = idle_handle(lab);
  EXPECT_EQ(evaluate_hyperedge(lab, {h, h, h}, 3, 7), 0.0);
}

TEST(Grapher, MatchesDirectEpisodeReplay) {
  const Lab lab = make_lab();
  const std::vector<PolicyHandle> team{PolicyHandle::vicsek(), PolicyHandle::greedy(), PolicyHandle::vicsek()};
  const std::uint64_t root = 99;
  double expect = 0.0;
  for (std::uint64_t e = 0; e < 6; ++e)
    expect += run_episode(lab.arena(), lab.tuning(), team, PolicyHandle::evader(), derive_seed(root, {e})).captures / 2.0;
  expect /= 6;
  EXPECT_DOUBLE_EQ(evaluate_hyperedge(lab, team, 6, root, 1), expect);
  EXPECT_DOUBLE_EQ(evaluate_hyperedge(lab, team, 6, root, 4), expect);
}

TEST(Grapher, CompleteGraphSizes) {
  const Lab lab = make_lab();
  auto h = rule_handles(3);
  EXPECT_EQ(complete_hypergraph(lab, h).edges().size(), 1u);
  h = rule_handles(4);
  const HyFoG g = complete_hypergraph(lab, h);
  EXPECT_EQ(g.edges().size(), 4u);
  EXPECT_TRUE(validate(g).empty());
  for (const auto& e : g.edges()) {
    EXPECT_GE(e.weight, 0.0);
    EXPECT_LE(e.weight, 1.0);
  }
}

TEST(Grapher, ExtensionAddsEverySubsetAndKeepsOldEdges) {
  auto gcfg = tiny_generation();
  gcfg.episodes_per_edge = 1;
  gcfg.max_graph_size = 10;
  const Lab lab = make_lab(gcfg);
  auto h = rule_handles(10);
  Rng rng(3);
  for (int n : {4, 9}) {
    HyFoG prev = random_complete(n, 3, rng);
    const NodeId learner = n;
    const HyFoG g = grapher_extend(lab, prev, learner, h);
    EXPECT_EQ(static_cast<long>(g.edges().size() - prev.edges().size()), binom(n, 2));
    EXPECT_EQ(static_cast<long>(g.incident(learner).size()), binom(static_cast<int>(g.num_vertices()) - 1, 2));
    for (const auto& e : prev.edges()) EXPECT_EQ(g.weight_of(e.members), e.weight);
    EXPECT_TRUE(validate(g).empty());
  }
}

TEST(Grapher, DuplicateOfNewestNodeReproducesItsEdges) {
  // With the duplicate one id above the original, both occupy the same team
  // slot in every edge, and the shared episode seeds make the scores equal.
  const Lab lab = make_lab();
  auto h = rule_handles(3);
  h.emplace(3, h.at(2));
  HyFoG prev(3);
  for (int i = 0; i < 3; ++i) prev.add_vertex(i);
  prev.add_edge({0, 1, 2}, 0.5);
  const HyFoG g = grapher_extend(lab, prev, 3, h);
  const double original = evaluate_hyperedge(lab, team_of({0, 1, 2}, h), lab.generation().episodes_per_edge,
                                             lab.edge_root_seed());
  EXPECT_EQ(*g.weight_of({0, 1, 3}), original);
}

TEST(Grapher, NeedsEnoughNodes) {
  const Lab lab = make_lab();
  HyFoG tiny(3);
  tiny.add_vertex(0);
  EXPECT_THROW(grapher_extend(lab, tiny, 1, rule_handles(2)), ContractError);
}

TEST(Prune, RemovesLowestEtaOfWorkedExample) {
  const HyFoG g = prune_graph(worked_example(), 4);
  EXPECT_EQ(g.vertex_ids(), (std::vector<NodeId>{1, 2, 3}));
  EXPECT_EQ(g.edges().size(), 1u);
}

TEST(Prune, SmallGraphUnchanged) {
  const HyFoG g = worked_example();
  EXPECT_EQ(prune_graph(g, 10), g);
  EXPECT_EQ(prune_graph(g, 5), g);
}

TEST(Prune, BelowEdgeSizeIsContractError) { EXPECT_THROW(prune_graph(worked_example(), 3), ContractError); }

TEST(Prune, TiesGoToOldest) {
  HyFoG g(3);
  for (int i = 0; i < 5; ++i) g.add_vertex(i);
  for (auto& e : subsets_of_size({0, 1, 2, 3, 4}, 3)) g.add_edge(e, 1.0);
  // Equal weights: every node prefers the lexicographically smallest partner
  // set, so nodes 3 and 4 tie at eta 0 and 3 goes first.
  EXPECT_EQ(prune_graph(g, 4).vertex_ids(), (std::vector<NodeId>{0, 1, 2}));
}

TEST(Prune, NeverRemovesIncumbentTop) {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 4 + static_cast<int>(uniform_index(rng, 6));
    const HyFoG g = random_complete(n, 3, rng);
    const NodeId top = centrality_of(g).top();
    const HyFoG p = prune_graph(g, 4);
    EXPECT_TRUE(p.has_vertex(top)) << "trial " << trial;
    EXPECT_EQ(p.num_vertices(), 3u);
    EXPECT_TRUE(validate(p).empty());
  }
}

TEST(Phi, MyersonModeUsesClosedForm) {
  GenerationConfig gc;
  const HyFoG g = worked_example();
  const auto phi = compute_phi(g, gc);
  EXPECT_NEAR(phi.probabilities.at(1), 0.2595, 1e-4);
  EXPECT_NEAR(phi.probabilities.at(2), 0.2163, 1e-4);
  EXPECT_NEAR(phi.probabilities.at(3), 0.2359, 1e-4);
  EXPECT_NEAR(phi.probabilities.at(4), 0.2883, 1e-4);
}

TEST(Phi, InverseMeanRewardMode) {
  GenerationConfig gc;
  gc.phi_mode = PhiMode::inverse_mean_reward;
  const auto phi = compute_phi(worked_example(), gc);
  // Mean incident weights: 10/3, 4, 11/3, 3.
  const double w[] = {1 / (10.0 / 3 + 1e-6), 1 / (4.0 + 1e-6), 1 / (11.0 / 3 + 1e-6), 1 / (3.0 + 1e-6)};
  const double total = w[0] + w[1] + w[2] + w[3];
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(phi.probabilities.at(i + 1), w[i] / total, 1e-12);
}

TEST(Phi, EqualWeightsGiveExchangeableTeammates) {
  HyFoG g(3);
  for (int i = 0; i < 6; ++i) g.add_vertex(i);
  for (auto& e : subsets_of_size({0, 1, 2, 3, 4, 5}, 3)) g.add_edge(e, 0.4);
  for (auto mode : {PhiMode::myerson, PhiMode::inverse_mean_reward}) {
    GenerationConfig gc;
    gc.phi_mode = mode;
    const auto phi = compute_phi(g, gc);
    for (const auto& [_, p] : phi.probabilities) EXPECT_NEAR(p, 1.0 / 6, 1e-12);
    Rng rng(21);
    std::map<std::pair<NodeId, NodeId>, int> pairs;
    const int draws = 30000;
    for (int k = 0; k < draws; ++k) {
      auto t = sample_teammates(phi, 2, {99}, rng);
      std::sort(t.begin(), t.end());
      ++pairs[{t[0], t[1]}];
    }
    ASSERT_EQ(pairs.size(), 15u);
    // Chi-square against 15 equally likely pairs; 14 dof, 99.9% point ~36.1.
    const double expect = draws / 15.0;
    double chi2 = 0.0;
    for (const auto& [_, c] : pairs) chi2 += (c - expect) * (c - expect) / expect;
    EXPECT_LT(chi2, 36.1);
  }
}

TEST(Phi, PointMassCannotFillATeam) {
  PhiDistribution phi;
  phi.probabilities = {{0, 1.0}, {1, 0.0}, {2, 0.0}};
  Rng rng(1);
  EXPECT_THROW(sample_teammates(phi, 2, {7}, rng), ContractError);
}

TEST(Oracle, ZeroBudgetChecksInitialPolicyOnce) {
  auto gc = tiny_generation();
  gc.generation_steps = 0;
  const Lab lab = make_lab(gc);
  Population pop;
  for (int i = 0; i < 4; ++i) pop.emplace(i, lab.fresh_policy(100 + i));
  const HyFoG g = complete_hypergraph(lab, handles_for(pop));
  const auto res = oracle_train(lab, g, pop, 4, 1);
  const auto& r = res.record;
  EXPECT_EQ(r.training.acceptance_checks, 1);
  EXPECT_EQ(r.training.env_steps, 0);
  EXPECT_EQ(r.initialized_from, centrality_of(g).top());
  EXPECT_EQ(res.candidate, pop.at(r.initialized_from));
  EXPECT_EQ(r.accepted, r.rank <= gc.acceptance_rank);
}

TEST(Oracle, RecordIsRecheckableFromTrialGraph) {
  const Lab lab = make_lab();
  Population pop;
  for (int i = 0; i < 4; ++i) pop.emplace(i, lab.fresh_policy(200 + i));
  const HyFoG g = complete_hypergraph(lab, handles_for(pop));
  const auto res = oracle_train(lab, g, pop, 4, 1);
  const auto& r = res.record;
  EXPECT_EQ(r.graph_hash, hyfog_hash(res.trial_graph));
  const auto c = centrality_of(res.trial_graph);
  EXPECT_EQ(c, r.centrality);
  EXPECT_EQ(c.rank_of(4), r.rank);
  EXPECT_EQ(r.accepted, r.rank <= lab.generation().acceptance_rank);
  EXPECT_EQ(r.phi, compute_phi(g, lab.generation()));
  EXPECT_GE(r.training.acceptance_checks, 1);
  EXPECT_LE(r.training.env_steps, lab.generation().generation_steps);
  // Re-scoring the candidate reproduces the archived trial graph.
  auto h = handles_for(pop);
  h.emplace(4, PolicyHandle::parametric(res.candidate, "node_4"));
  EXPECT_EQ(grapher_extend(lab, g, 4, h), res.trial_graph);
}

TEST(Oracle, RejectsInvalidGraph) {
  const Lab lab = make_lab();
  Population pop;
  for (int i = 0; i < 4; ++i) pop.emplace(i, lab.fresh_policy(i));
  HyFoG g(3);
  for (int i = 0; i < 4; ++i) g.add_vertex(i);
  g.add_edge({0, 1, 2}, 0.3);
  EXPECT_THROW(oracle_train(lab, g, pop, 4, 1), ContractError);
}

TEST(Pretrain, SizesAndDeterminismAcrossWorkers) {
  auto gc = tiny_generation();
  gc.population_size = 3;
  auto a = pretrain_population(make_lab(gc));
  EXPECT_EQ(a.population.size(), 3u);
  EXPECT_EQ(a.graph.edges().size(), 1u);
  EXPECT_TRUE(validate(a.graph).empty());
  gc.workers = 3;
  auto b = pretrain_population(make_lab(gc));
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_EQ(a.population, b.population);
}

TEST(Pretrain, EntropyBonusChangesTraining) {
  auto gc = tiny_generation();
  gc.population_size = 3;
  gc.alpha = 0.0;
  auto plain = pretrain_population(make_lab(gc));
  gc.alpha = 0.5;
  auto bonus = pretrain_population(make_lab(gc));
  EXPECT_NE(plain.population.at(0), bonus.population.at(0));
  // Training never starts from a shared point: initial policies differ.
  EXPECT_NE(plain.population.at(0), plain.population.at(1));
}

TEST(Loop, ZeroGenerationsReturnsPretrainedGraph) {
  auto gc = tiny_generation();
  gc.generations = 0;
  const Lab lab = make_lab(gc);
  Population pop;
  for (int i = 0; i < 4; ++i) pop.emplace(i, lab.fresh_policy(i));
  const HyFoG g0 = complete_hypergraph(lab, handles_for(pop));
  const auto ar = generation_loop(lab, pop, g0);
  EXPECT_TRUE(ar.records.empty());
  EXPECT_EQ(ar.graph, g0);
}

TEST(Loop, ArchivedSnapshotsRederive) {
  for (auto mode : {PhiMode::myerson, PhiMode::inverse_mean_reward}) {
    auto gc = tiny_generation();
    gc.phi_mode = mode;
    gc.generations = 3;
    const Lab lab = make_lab(gc);
    const fs::path dir = scratch_dir(to_string(mode));
    RunDir run(dir, lab.arena().config_hash());
    const auto pre = pretrain_population(lab, run.observer());
    run.save_graph(0, pre.graph);
    for (const auto& [id, p] : pre.population) run.save_node(id, p);
    const auto ar = generation_loop(lab, pre.population, pre.graph, &run, run.observer());
    ASSERT_EQ(ar.records.size(), 3u);

    HyFoG prev = load_graph(dir, 0);
    EXPECT_EQ(prev, pre.graph);
    for (int j = 1; j <= 3; ++j) {
      const auto& rec = ar.records[j - 1];
      const HyFoG trial = load_graph(dir, j);
      EXPECT_EQ(hyfog_hash(trial), rec.graph_hash);
      const auto meta = read_json(RunDir::generation_dir(dir, j) / "record.json");
      EXPECT_EQ(meta.at("accepted").get<bool>(), rec.accepted);
      EXPECT_EQ(meta.at("node").get<int>(), rec.node);
      const auto c = centrality_of(trial);
      EXPECT_EQ(c.rank_of(rec.node), rec.rank);
      if (rec.accepted) {
        EXPECT_LE(rec.rank, gc.acceptance_rank);
      }
      // The graph the oracle saw is the trial graph without the new node.
      HyFoG seen = trial;
      seen.remove_vertex(rec.node);
      EXPECT_EQ(seen, prune_graph(prev, gc.max_graph_size));
      const auto phi = phi_from_json(read_json(RunDir::generation_dir(dir, j) / "phi.json"));
      EXPECT_EQ(phi, compute_phi(seen, gc));
      EXPECT_EQ(static_cast<long>(trial.incident(rec.node).size()), binom(static_cast<int>(trial.num_vertices()) - 1, 2));
      EXPECT_TRUE(validate(trial).empty());
      EXPECT_EQ(load_checkpoint((RunDir::generation_dir(dir, j) / "checkpoint").string()).params,
                ar.population.at(rec.node));
      prev = trial;
    }
    EXPECT_EQ(prev, ar.graph);
    EXPECT_LE(static_cast<int>(ar.graph.num_vertices()), gc.max_graph_size);
    EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
    EXPECT_EQ(load_population(dir, ar.graph), [&] {
      Population p;
      for (NodeId id : ar.graph.vertex_ids()) p.emplace(id, ar.population.at(id));
      return p;
    }());
    fs::remove_all(dir);
  }
}

TEST(Loop, MissingSnapshotIsFileError) {
  EXPECT_THROW(load_graph(scratch_dir("missing"), 4), FileError);
}
