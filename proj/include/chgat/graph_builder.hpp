#pragma once

// Heterogeneous character graphs: a per-character semantic graph (one- and
// two-hop semantic components), a per-character phonetic graph (the single
// phonetic component), and the shared character-pronunciation-character
// meta-path graph.

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chgat/char_knowledge.hpp"
#include "chgat/error.hpp"

namespace chgat {

enum class NodeKind { character, semantic_component, phonetic_component, pronunciation };

inline const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::character: return "character";
    case NodeKind::semantic_component: return "semantic_component";
    case NodeKind::phonetic_component: return "phonetic_component";
    case NodeKind::pronunciation: return "pronunciation";
  }
  return "?";
}

struct NodeId {
  NodeKind kind = NodeKind::character;
  std::string key;

  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend bool operator<(const NodeId& a, const NodeId& b) {
    return std::tie(a.kind, a.key) < std::tie(b.kind, b.key);
  }
};

enum class EdgeKind { char_sem, char_phon };

struct Edge {
  NodeId from;
  NodeId to;
  EdgeKind kind = EdgeKind::char_sem;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class ComponentGraph {
 public:
  ComponentGraph() = default;
  explicit ComponentGraph(std::string character) : target_{NodeKind::character, std::move(character)} {
    add_node(target_, 0);
  }

  const NodeId& target() const noexcept { return target_; }
  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  bool contains(const NodeId& node) const { return find(node) != npos; }

  std::size_t position(const NodeId& node) const {
    const auto i = find(node);
    if (i == npos) throw InvalidArgument("node not in graph: " + node.key);
    return positions_[i];
  }

  /// Every node except the target, in insertion order. Falls back to the
  /// target alone for single-node graphs so attention always has input.
  std::vector<NodeId> neighborhood() const {
    if (nodes_.size() == 1) return {target_};
    return {nodes_.begin() + 1, nodes_.end()};
  }

  // Returns false when the node already exists (first position wins).
  bool add_node(const NodeId& node, std::size_t position) {
    if (contains(node)) return false;
    nodes_.push_back(node);
    positions_.push_back(position);
    return true;
  }

  void add_edge(const Edge& edge) {
    if (std::find(edges_.begin(), edges_.end(), edge) == edges_.end()) edges_.push_back(edge);
  }

  friend bool operator==(const ComponentGraph&, const ComponentGraph&) = default;

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t find(const NodeId& node) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i] == node) return i;
    }
    return npos;
  }

  NodeId target_;
  std::vector<NodeId> nodes_;
  std::vector<std::size_t> positions_;
  std::vector<Edge> edges_;
};

/// Characters sharing a toned pronunciation. Symmetric, no self loops.
class MetaPathGraph {
 public:
  const std::vector<std::string>& neighbors(const std::string& ch) const {
    auto it = adjacency_.find(ch);
    if (it == adjacency_.end()) throw UnknownCharacter(ch);
    return it->second;
  }

  bool contains(const std::string& ch) const { return adjacency_.count(ch) != 0; }
  const std::map<std::string, std::vector<std::string>>& adjacency() const noexcept { return adjacency_; }

  std::size_t edge_count() const {
    std::size_t total = 0;
    for (const auto& [_, n] : adjacency_) total += n.size();
    return total / 2;
  }

  friend bool operator==(const MetaPathGraph&, const MetaPathGraph&) = default;

 private:
  friend MetaPathGraph build_pronunciation_graph(const CharacterTable& table);
  std::map<std::string, std::vector<std::string>> adjacency_;
};

inline ComponentGraph build_semantic_graph(const CharacterTable& table, const std::string& ch) {
  ComponentGraph g(ch);
  for (const auto& hc : two_hop_semantic_components(table, ch)) {
    const NodeId node{NodeKind::semantic_component, hc.ref.glyph};
    g.add_node(node, hc.ref.position_index);
    const NodeId from = hc.hop == 1 ? g.target() : NodeId{NodeKind::semantic_component, hc.parent};
    g.add_edge({from, node, EdgeKind::char_sem});
  }
  return g;
}

inline ComponentGraph build_phonetic_graph(const CharacterTable& table, const std::string& ch) {
  ComponentGraph g(ch);
  const auto* rec = table.find(ch);
  if (rec == nullptr || !rec->is_picto_phonetic) return g;
  for (const auto& c : rec->components) {
    if (c.role != ComponentRole::phonetic) continue;
    const NodeId node{NodeKind::phonetic_component, c.glyph};
    g.add_node(node, c.position_index);
    g.add_edge({g.target(), node, EdgeKind::char_phon});
  }
  return g;
}

inline MetaPathGraph build_pronunciation_graph(const CharacterTable& table) {
  MetaPathGraph g;
  std::map<std::string, std::vector<std::string>> by_pron;
  for (const auto& rec : table.records()) {
    g.adjacency_[rec.character];
    if (rec.pronunciation) by_pron[rec.pronunciation->key()].push_back(rec.character);
  }
  for (auto& [_, group] : by_pron) {
    std::sort(group.begin(), group.end());
    for (const auto& a : group) {
      auto& adj = g.adjacency_[a];
      for (const auto& b : group) {
        if (a != b) adj.push_back(b);
      }
    }
  }
  return g;
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

/// Seeded uniform sample without replacement of min(cap, degree) neighbors.
inline std::vector<NodeId> neighbor_sample(const MetaPathGraph& graph, const std::string& ch, std::size_t cap,
                                           std::uint64_t seed) {
  if (cap == 0) throw InvalidArgument("neighbor sample cap must be >= 1");
  std::vector<std::string> pool = graph.neighbors(ch);
  if (pool.size() > cap) {
    std::mt19937_64 rng(detail::fnv1a(ch, seed));
    for (std::size_t i = 0; i < cap; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(cap);
  }
  std::vector<NodeId> out;
  out.reserve(pool.size());
  for (auto& key : pool) out.push_back({NodeKind::character, std::move(key)});
  return out;
}

/// All three graph kinds for every character in a table. OOV characters are
/// served from single-node fallbacks built on demand.
class HetGraphBundle {
 public:
  HetGraphBundle() = default;
  explicit HetGraphBundle(const CharacterTable& table) : pronunciation_(build_pronunciation_graph(table)) {
    for (const auto& rec : table.records()) {
      semantic_.emplace(rec.character, build_semantic_graph(table, rec.character));
      phonetic_.emplace(rec.character, build_phonetic_graph(table, rec.character));
    }
  }

  ComponentGraph semantic(const std::string& ch) const {
    auto it = semantic_.find(ch);
    return it == semantic_.end() ? ComponentGraph(ch) : it->second;
  }

  ComponentGraph phonetic(const std::string& ch) const {
    auto it = phonetic_.find(ch);
    return it == phonetic_.end() ? ComponentGraph(ch) : it->second;
  }

  const MetaPathGraph& pronunciation() const noexcept { return pronunciation_; }

  const std::map<std::string, ComponentGraph>& semantic_graphs() const noexcept { return semantic_; }
  const std::map<std::string, ComponentGraph>& phonetic_graphs() const noexcept { return phonetic_; }

  friend bool operator==(const HetGraphBundle&, const HetGraphBundle&) = default;

 private:
  std::map<std::string, ComponentGraph> semantic_;
  std::map<std::string, ComponentGraph> phonetic_;
  MetaPathGraph pronunciation_;
};

struct GraphSummary {
  std::size_t characters = 0;
  std::size_t semantic_components = 0;
  std::size_t phonetic_components = 0;
  std::size_t pronunciations = 0;
  std::size_t char_sem_edges = 0;
  std::size_t char_phon_edges = 0;
  std::size_t char_pron_edges = 0;
  std::size_t meta_path_pairs = 0;
};

/// Distinct node and edge counts per type across the whole table.
inline GraphSummary summarize(const CharacterTable& table, const HetGraphBundle& bundle) {
  GraphSummary s;
  s.characters = table.size();
  std::set<std::string> sem, phon, pron;
  std::set<std::pair<NodeId, NodeId>> sem_edges, phon_edges;
  for (const auto& [_, g] : bundle.semantic_graphs()) {
    for (const auto& n : g.nodes()) {
      if (n.kind == NodeKind::semantic_component) sem.insert(n.key);
    }
    for (const auto& e : g.edges()) sem_edges.emplace(e.from, e.to);
  }
  for (const auto& [_, g] : bundle.phonetic_graphs()) {
    for (const auto& n : g.nodes()) {
      if (n.kind == NodeKind::phonetic_component) phon.insert(n.key);
    }
    for (const auto& e : g.edges()) phon_edges.emplace(e.from, e.to);
  }
  for (const auto& rec : table.records()) {
    if (rec.pronunciation) {
      pron.insert(rec.pronunciation->key());
      ++s.char_pron_edges;
    }
  }
  s.semantic_components = sem.size();
  s.phonetic_components = phon.size();
  s.pronunciations = pron.size();
  s.char_sem_edges = sem_edges.size();
  s.char_phon_edges = phon_edges.size();
  s.meta_path_pairs = bundle.pronunciation().edge_count();
  return s;
}

/// One JSON object per character: {char, semantic_edges, phonetic_edges,
/// pronunciation_neighbors_count}.
inline void write_graph_dump(std::ostream& out, const CharacterTable& table, const HetGraphBundle& bundle) {
  auto edges_json = [](const ComponentGraph& g) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : g.edges()) arr.push_back({e.from.key, e.to.key});
    return arr;
  };
  for (const auto& rec : table.records()) {
    nlohmann::json obj;
    obj["char"] = rec.character;
    obj["semantic_edges"] = edges_json(bundle.semantic(rec.character));
    obj["phonetic_edges"] = edges_json(bundle.phonetic(rec.character));
    obj["pronunciation_neighbors_count"] = bundle.pronunciation().neighbors(rec.character).size();
    out << obj.dump() << '\n';
  }
}

}  // namespace chgat
