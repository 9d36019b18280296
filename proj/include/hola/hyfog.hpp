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

#ifndef HOLA_HYFOG_HPP
#define HOLA_HYFOG_HPP

// Hypergraphic-form game: an l-uniform weighted hypergraph whose vertices are
// policies and whose hyperedge weights score how well those l policies do as
// a team. From it we derive the preference hypergraph (each node points at the
// partners of its best hyperedge) and the in-degree based hyper-preference
// centrality used to rank nodes.

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hola/core.hpp"
#include "json.hpp"

namespace hola {

using NodeId = int;

struct Hyperedge {
  std::vector<NodeId> members;  // sorted ascending
  double weight = 0.0;
  friend bool operator==(const Hyperedge&, const Hyperedge&) = default;
};

class HyFoG {
 public:
  explicit HyFoG(int edge_size = 3) : edge_size_(edge_size) { require(edge_size >= 2, "edge size must be >= 2"); }

  int edge_size() const { return edge_size_; }
  const std::map<NodeId, std::string>& vertices() const { return vertices_; }
  const std::vector<Hyperedge>& edges() const { return edges_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  bool has_vertex(NodeId id) const { return vertices_.count(id) != 0; }

  std::vector<NodeId> vertex_ids() const {
    std::vector<NodeId> ids;
    for (const auto& [id, _] : vertices_) ids.push_back(id);
    return ids;
  }

  void add_vertex(NodeId id, std::string label = {}) {
    require(!has_vertex(id), "duplicate vertex " + std::to_string(id));
    vertices_.emplace(id, label.empty() ? "node_" + std::to_string(id) : std::move(label));
  }

  // Members are stored sorted; edges are kept in lexicographic member order.
  void add_edge(std::vector<NodeId> members, double weight) {
    std::sort(members.begin(), members.end());
    auto pos = std::lower_bound(edges_.begin(), edges_.end(), members,
                                [](const Hyperedge& e, const std::vector<NodeId>& m) { return e.members < m; });
    require(pos == edges_.end() || pos->members != members, "duplicate hyperedge");
    edges_.insert(pos, Hyperedge{std::move(members), weight});
  }

  // Drops a vertex together with every hyperedge that contains it.
  void remove_vertex(NodeId id) {
    require(has_vertex(id), "unknown vertex " + std::to_string(id));
    vertices_.erase(id);
    std::erase_if(edges_, [&](const Hyperedge& e) {
      return std::find(e.members.begin(), e.members.end(), id) != e.members.end();
    });
  }

  std::optional<double> weight_of(std::vector<NodeId> members) const {
    std::sort(members.begin(), members.end());
    for (const auto& e : edges_)
      if (e.members == members) return e.weight;
    return std::nullopt;
  }

  std::vector<const Hyperedge*> incident(NodeId id) const {
    std::vector<const Hyperedge*> out;
    for (const auto& e : edges_)
      if (std::binary_search(e.members.begin(), e.members.end(), id)) out.push_back(&e);
    return out;
  }

  double total_weight() const {
    double s = 0.0;
    for (const auto& e : edges_) s += e.weight;
    return s;
  }

  friend bool operator==(const HyFoG&, const HyFoG&) = default;

 private:
  int edge_size_;
  std::map<NodeId, std::string> vertices_;
  std::vector<Hyperedge> edges_;
};

// Returns every structural violation; empty means the graph is valid.
inline std::vector<std::string> validate(const HyFoG& g) {
  std::vector<std::string> out;
  const int l = g.edge_size();
  std::map<NodeId, std::size_t> index;
  for (NodeId id : g.vertex_ids()) index.emplace(id, index.size());
  std::vector<bool> covered(index.size(), false);

  // Union-find over vertices joined by shared hyperedges.
  std::vector<std::size_t> parent(index.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  for (const auto& e : g.edges()) {
    std::ostringstream name;
    name << '{';
    for (std::size_t k = 0; k < e.members.size(); ++k) name << (k ? "," : "") << e.members[k];
    name << '}';
    if (static_cast<int>(e.members.size()) != l)
      out.push_back("uniformity: edge " + name.str() + " has size " + std::to_string(e.members.size()) +
                    ", expected " + std::to_string(l));
    if (std::adjacent_find(e.members.begin(), e.members.end()) != e.members.end())
      out.push_back("edge " + name.str() + " repeats a member");
    if (!std::isfinite(e.weight)) out.push_back("weight of edge " + name.str() + " is not finite");
    std::optional<std::size_t> first;
    for (NodeId m : e.members) {
      auto it = index.find(m);
      if (it == index.end()) {
        out.push_back("edge " + name.str() + " references unknown vertex " + std::to_string(m));
        continue;
      }
      covered[it->second] = true;
      if (first) parent[find(it->second)] = find(*first);
      else first = it->second;
    }
  }
  for (const auto& [id, i] : index)
    if (!covered[i]) out.push_back("vertex " + std::to_string(id) + " belongs to no hyperedge");
  std::set<std::size_t> roots;
  for (std::size_t i = 0; i < parent.size(); ++i) roots.insert(find(i));
  if (roots.size() > 1)
    out.push_back("connectivity: graph has " + std::to_string(roots.size()) + " components");
  return out;
}

struct PreferenceHypergraph {
  std::vector<NodeId> vertices;
  std::map<NodeId, std::vector<NodeId>> ends;  // source -> the other l-1 members of its best edge
  std::map<NodeId, double> weights;            // weight of that edge

  friend bool operator==(const PreferenceHypergraph&, const PreferenceHypergraph&) = default;
};

// For each node picks its heaviest incident hyperedge; exact ties go to the
// lexicographically smallest member tuple.
inline PreferenceHypergraph build_preference_hypergraph(const HyFoG& g) {
  PreferenceHypergraph pg;
  pg.vertices = g.vertex_ids();
  for (NodeId i : pg.vertices) {
    const Hyperedge* best = nullptr;
    for (const Hyperedge* e : g.incident(i))  // lexicographic order
      if (!best || e->weight > best->weight) best = e;
    if (!best) throw ContractError("validation error: vertex " + std::to_string(i) + " has no hyperedge");
    std::vector<NodeId> rest;
    for (NodeId m : best->members)
      if (m != i) rest.push_back(m);
    pg.ends.emplace(i, std::move(rest));
    pg.weights.emplace(i, best->weight);
  }
  return pg;
}

struct CentralityReport {
  std::map<NodeId, double> eta;
  std::map<NodeId, int> in_degree;
  std::vector<NodeId> ranking;  // eta descending, newest (largest) id first on ties

  // 1-based position in the ranking.
  int rank_of(NodeId id) const {
    auto it = std::find(ranking.begin(), ranking.end(), id);
    require(it != ranking.end(), "node not ranked: " + std::to_string(id));
    return static_cast<int>(it - ranking.begin()) + 1;
  }
  NodeId top() const { return ranking.front(); }
  NodeId bottom_oldest_first() const {
    // Lowest eta; among equals the oldest (smallest id).
    NodeId pick = ranking.front();
    for (NodeId id : ranking)
      if (eta.at(id) < eta.at(pick) || (eta.at(id) == eta.at(pick) && id < pick)) pick = id;
    return pick;
  }

  friend bool operator==(const CentralityReport&, const CentralityReport&) = default;
};

// eta_i = d(i) / (|V| - 1) where d(i) counts the sources whose preferred
// partner set contains i.
inline CentralityReport hyper_preference_centrality(const PreferenceHypergraph& pg) {
  require(pg.vertices.size() >= 2, "centrality needs at least two vertices");
  CentralityReport r;
  for (NodeId v : pg.vertices) r.in_degree[v] = 0;
  for (const auto& [src, ends] : pg.ends)
    for (NodeId e : ends)
      if (e != src) ++r.in_degree.at(e);
  const double denom = static_cast<double>(pg.vertices.size() - 1);
  for (const auto& [v, d] : r.in_degree) r.eta[v] = d / denom;
  r.ranking = pg.vertices;
  std::sort(r.ranking.begin(), r.ranking.end(), [&](NodeId a, NodeId b) {
    if (r.in_degree.at(a) != r.in_degree.at(b)) return r.in_degree.at(a) > r.in_degree.at(b);
    return a > b;
  });
  return r;
}

inline CentralityReport centrality_of(const HyFoG& g) {
  return hyper_preference_centrality(build_preference_hypergraph(g));
}

// ---------------------------------------------------------------------------
// Canonical serialization

inline nlohmann::json to_json(const HyFoG& g) {
  nlohmann::json j;
  j["edge_size"] = g.edge_size();
  j["vertices"] = nlohmann::json::array();
  for (const auto& [id, label] : g.vertices()) j["vertices"].push_back({{"id", id}, {"label", label}});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges()) j["edges"].push_back({{"members", e.members}, {"weight", e.weight}});
  return j;
}

inline HyFoG hyfog_from_json(const nlohmann::json& j) {
  try {
    HyFoG g(j.at("edge_size").get<int>());
    for (const auto& v : j.at("vertices")) g.add_vertex(v.at("id").get<NodeId>(), v.value("label", std::string{}));
    for (const auto& e : j.at("edges"))
      g.add_edge(e.at("members").get<std::vector<NodeId>>(), e.at("weight").get<double>());
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw FileError(std::string("malformed hypergraph json: ") + e.what());
  }
}

inline std::string canonical_text(const HyFoG& g) { return to_json(g).dump(); }
inline std::string hyfog_hash(const HyFoG& g) { return hex64(fnv1a(canonical_text(g))); }

inline nlohmann::json to_json(const PreferenceHypergraph& pg) {
  nlohmann::json j;
  j["vertices"] = pg.vertices;
  j["preferences"] = nlohmann::json::array();
  for (const auto& [src, ends] : pg.ends)
    j["preferences"].push_back({{"source", src}, {"ends", ends}, {"weight", pg.weights.at(src)}});
  return j;
}

inline nlohmann::json to_json(const CentralityReport& r) {
  nlohmann::json j;
  j["eta"] = nlohmann::json::array();
  for (const auto& [id, eta] : r.eta) j["eta"].push_back({{"id", id}, {"eta", eta}, {"in_degree", r.in_degree.at(id)}});
  j["ranking"] = r.ranking;
  return j;
}

// DOT rendering of the preference hypergraph: every source is a star of arcs
// to its preferred partners, labelled with the underlying edge weight.
inline std::string to_dot(const PreferenceHypergraph& pg, const CentralityReport& c) {
  auto fmt = [](const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "digraph preference {\n";
  for (NodeId v : pg.vertices)
    os << "  n" << v << " [label=\"" << v << "\\neta=" << fmt("%.3g", c.eta.at(v)) << "\"];\n";
  for (const auto& [src, ends] : pg.ends)
    for (NodeId e : ends)
      os << "  n" << src << " -> n" << e << " [label=\"" << fmt("%.6g", pg.weights.at(src)) << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace hola

#endif  // HOLA_HYFOG_HPP
