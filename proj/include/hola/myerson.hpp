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

#ifndef HOLA_MYERSON_HPP
#define HOLA_MYERSON_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "hola/core.hpp"
#include "hola/hyfog.hpp"
#include "json.hpp"

namespace hola {

enum class MyersonMethod { closed_form, permutation_exact, monte_carlo };

inline std::string to_string(MyersonMethod m) {
  switch (m) {
    case MyersonMethod::closed_form: return "closed_form";
    case MyersonMethod::permutation_exact: return "permutation_exact";
    case MyersonMethod::monte_carlo: return "monte_carlo";
  }
  return "?";
}

struct MyersonReport {
  std::map<NodeId, double> values;
  std::map<NodeId, double> standard_errors;  // monte_carlo only
  MyersonMethod method = MyersonMethod::closed_form;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;

  double sum() const {
    double s = 0.0;
    for (const auto& [_, v] : values) s += v;
    return s;
  }
};

inline double coalition_value(const HyFoG& g, const std::vector<NodeId>& coalition) {
  std::set<NodeId> s(coalition.begin(), coalition.end());
  for (NodeId id : s) require(g.has_vertex(id), "coalition member is not a vertex: " + std::to_string(id));
  if (static_cast<int>(s.size()) < g.edge_size()) return 0.0;
  double v = 0.0;
  for (const auto& e : g.edges())
    if (std::all_of(e.members.begin(), e.members.end(), [&](NodeId m) { return s.count(m) != 0; })) v += e.weight;
  return v;
}

inline constexpr int kExactLimit = 9;

// Reference implementation: averages marginal contributions over every
// ordering of the players, reading v from a table over all subsets.
inline MyersonReport myerson_permutation_exact(const HyFoG& g, int exact_limit = kExactLimit) {
  const std::vector<NodeId> ids = g.vertex_ids();
  const int n = static_cast<int>(ids.size());
  if (n > exact_limit)
    throw ContractError("graph has " + std::to_string(n) + " vertices, above the exact limit of " +
                        std::to_string(exact_limit) + "; use the closed form or monte carlo estimator");

  std::vector<double> v(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < v.size(); ++mask) {
    std::vector<NodeId> s;
    for (int k = 0; k < n; ++k)
      if (mask >> k & 1) s.push_back(ids[k]);
    v[mask] = coalition_value(g, s);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> total(n, 0.0);
  std::uint64_t count = 0;
  do {
    std::size_t mask = 0;
    for (int k : order) {
      total[k] += v[mask | std::size_t{1} << k] - v[mask];
      mask |= std::size_t{1} << k;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));

  MyersonReport r;
  r.method = MyersonMethod::permutation_exact;
  r.samples = count;
  for (int k = 0; k < n; ++k) r.values[ids[k]] = total[k] / static_cast<double>(count);
  return r;
}

// v is a sum of one unanimity game per hyperedge, so each edge's weight is
// split evenly among its members.
inline MyersonReport myerson_closed_form(const HyFoG& g) {
  auto problems = validate(g);
  if (!problems.empty()) throw ContractError("invalid hypergraph: " + problems.front());
  MyersonReport r;
  r.method = MyersonMethod::closed_form;
  for (NodeId id : g.vertex_ids()) r.values[id] = 0.0;
  const double share = 1.0 / g.edge_size();
  for (const auto& e : g.edges())
    for (NodeId m : e.members) r.values[m] += share * e.weight;
  return r;
}

// Permutation sampling. The marginal contribution of i given predecessors P is
// the weight of edges containing i whose other members all lie in P. With
// `exhaustive` set, every ordering is visited once and `samples` is ignored.
inline MyersonReport myerson_monte_carlo(const HyFoG& g, std::uint64_t samples, std::uint64_t seed,
                                         bool exhaustive = false) {
  require(exhaustive || samples >= 1, "monte carlo needs at least one sample");
  const std::vector<NodeId> ids = g.vertex_ids();
  const int n = static_cast<int>(ids.size());
  std::map<NodeId, int> index;
  for (int k = 0; k < n; ++k) index[ids[k]] = k;

  // Incident edges per vertex as index lists.
  struct Local {
    std::vector<int> members;
    double weight;
  };
  std::vector<std::vector<Local>> incident(n);
  for (const auto& e : g.edges()) {
    Local le{{}, e.weight};
    for (NodeId m : e.members) le.members.push_back(index.at(m));
    for (int k : le.members) incident[k].push_back(le);
  }

  std::vector<double> mean(n, 0.0), m2(n, 0.0);
  std::vector<char> placed(n);
  std::uint64_t count = 0;
  auto visit = [&](const std::vector<int>& order) {
    std::fill(placed.begin(), placed.end(), 0);
    ++count;
    for (int k : order) {
      double marginal = 0.0;
      for (const auto& e : incident[k]) {
        bool complete = true;
        for (int m : e.members)
          if (m != k && !placed[m]) complete = false;
        if (complete) marginal += e.weight;
      }
      placed[k] = 1;
      const double delta = marginal - mean[k];
      mean[k] += delta / static_cast<double>(count);
      m2[k] += delta * (marginal - mean[k]);
    }
  };

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (exhaustive) {
    do visit(order);
    while (std::next_permutation(order.begin(), order.end()));
  } else {
    Rng rng(seed);
    for (std::uint64_t s = 0; s < samples; ++s) {
      std::iota(order.begin(), order.end(), 0);
      for (int k = n - 1; k > 0; --k) std::swap(order[k], order[uniform_index(rng, k + 1)]);
      visit(order);
    }
  }

  MyersonReport r;
  r.method = MyersonMethod::monte_carlo;
  r.samples = count;
  r.seed = seed;
  for (int k = 0; k < n; ++k) {
    r.values[ids[k]] = mean[k];
    const double var = count > 1 ? m2[k] / static_cast<double>(count - 1) : 0.0;
    r.standard_errors[ids[k]] = std::sqrt(var / static_cast<double>(count));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Teammate sampling distribution

enum class PhiShape { reciprocal, softmax };

inline std::string to_string(PhiShape s) { return s == PhiShape::reciprocal ? "reciprocal" : "softmax"; }

inline PhiShape phi_shape_from_name(const std::string& s) {
  if (s == "reciprocal") return PhiShape::reciprocal;
  if (s == "softmax") return PhiShape::softmax;
  throw ConfigError("unknown phi shape '" + s + "' (expected reciprocal or softmax)");
}

inline constexpr double kPhiEpsilon = 1e-6;

struct PhiDistribution {
  std::map<NodeId, double> probabilities;
  friend bool operator==(const PhiDistribution&, const PhiDistribution&) = default;
};

// Lower value, more mass: the learner gets paired more often with the nodes
// that currently contribute least.
inline PhiDistribution phi_distribution(const std::map<NodeId, double>& values, double epsilon = kPhiEpsilon,
                                        PhiShape shape = PhiShape::reciprocal) {
  require(epsilon > 0.0, "phi epsilon must be positive");
  require(!values.empty(), "phi needs at least one node");
  PhiDistribution phi;
  double lo = values.begin()->second;
  for (const auto& [id, v] : values) {
    require(std::isfinite(v), "non-finite value for node " + std::to_string(id));
    require(v >= 0.0, "negative value for node " + std::to_string(id));
    lo = std::min(lo, v);
  }
  double total = 0.0;
  for (const auto& [id, v] : values) {
    const double raw = shape == PhiShape::reciprocal ? 1.0 / (v + epsilon) : std::exp(-(v - lo));
    phi.probabilities[id] = raw;
    total += raw;
  }
  for (auto& [_, p] : phi.probabilities) p /= total;
  return phi;
}

inline PhiDistribution phi_distribution(const MyersonReport& report, double epsilon = kPhiEpsilon,
                                        PhiShape shape = PhiShape::reciprocal) {
  return phi_distribution(report.values, epsilon, shape);
}

// Sequential draws without replacement, renormalizing over what is left.
inline std::vector<NodeId> sample_teammates(const PhiDistribution& phi, int count, const std::set<NodeId>& exclude,
                                            Rng& rng) {
  std::vector<std::pair<NodeId, double>> pool;
  for (const auto& [id, p] : phi.probabilities)
    if (p > 0.0 && !exclude.count(id)) pool.emplace_back(id, p);
  require(count >= 0 && static_cast<std::size_t>(count) <= pool.size(),
          "cannot draw " + std::to_string(count) + " distinct teammates from a support of " +
              std::to_string(pool.size()));
  std::vector<NodeId> out;
  for (int k = 0; k < count; ++k) {
    double total = 0.0;
    for (const auto& [_, p] : pool) total += p;
    const double u = uniform01(rng) * total;
    std::size_t pick = pool.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      acc += pool[i].second;
      if (u < acc) {
        pick = i;
        break;
      }
    }
    out.push_back(pool[pick].first);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

inline nlohmann::json to_json(const MyersonReport& r) {
  nlohmann::json j;
  j["method"] = to_string(r.method);
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  j["values"] = nlohmann::json::array();
  for (const auto& [id, v] : r.values) {
    nlohmann::json row{{"id", id}, {"value", v}};
    if (auto it = r.standard_errors.find(id); it != r.standard_errors.end()) row["standard_error"] = it->second;
    j["values"].push_back(row);
  }
  return j;
}

inline nlohmann::json to_json(const PhiDistribution& phi) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [id, p] : phi.probabilities) j.push_back({{"id", id}, {"p", p}});
  return j;
}

inline PhiDistribution phi_from_json(const nlohmann::json& j) {
  PhiDistribution phi;
  for (const auto& row : j) phi.probabilities[row.at("id").get<NodeId>()] = row.at("p").get<double>();
  return phi;
}

}  // namespace hola

#endif  // HOLA_MYERSON_HPP
