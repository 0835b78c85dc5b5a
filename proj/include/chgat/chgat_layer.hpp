#pragma once

// The three-level heterogeneous graph attention layer: node-level attention
// inside each graph kind, a structure attention fusing the semantic and
// phonetic views, and an aggregate attention adding the pronunciation view.

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "chgat/autograd.hpp"
#include "chgat/char_knowledge.hpp"
#include "chgat/graph_builder.hpp"
#include "chgat/layers.hpp"
#include "chgat/params.hpp"
#include "chgat/vocabulary.hpp"

namespace chgat {

enum class VariantKind { full, variant_1, variant_2 };

inline const char* to_string(VariantKind v) {
  switch (v) {
    case VariantKind::full: return "full";
    case VariantKind::variant_1: return "variant_1";
    case VariantKind::variant_2: return "variant_2";
  }
  return "?";
}

inline VariantKind parse_variant(const std::string& name) {
  if (name == "full") return VariantKind::full;
  if (name == "variant_1") return VariantKind::variant_1;
  if (name == "variant_2") return VariantKind::variant_2;
  throw UnknownVariant(name);
}

/// Feature tables for every node kind plus the component position table.
/// `pronunciation` is undefined when the variant has no pronunciation graph.
struct EmbeddingTables {
  ad::Var character;
  ad::Var semantic;
  ad::Var phonetic;
  ad::Var pronunciation;
  ad::Var position;
  const ModelVocab* vocab = nullptr;

  std::size_t dim() const { return character.cols(); }
};

/// Feature vector of `node` plus the position vector at `position_index`.
/// Unknown keys map to the table's shared unknown row.
inline ad::Var initial_embedding(const EmbeddingTables& tables, const NodeId& node, std::size_t position_index) {
  if (position_index >= tables.position.rows()) {
    throw InvalidArgument("position " + std::to_string(position_index) + " outside position table of " +
                          std::to_string(tables.position.rows()));
  }
  const ad::Var* table = nullptr;
  const Vocabulary* vocab = nullptr;
  switch (node.kind) {
    case NodeKind::character: table = &tables.character; vocab = &tables.vocab->chars; break;
    case NodeKind::semantic_component: table = &tables.semantic; vocab = &tables.vocab->semantic; break;
    case NodeKind::phonetic_component: table = &tables.phonetic; vocab = &tables.vocab->phonetic; break;
    case NodeKind::pronunciation: table = &tables.pronunciation; vocab = &tables.vocab->syllables; break;
  }
  if (!table->defined()) throw InvalidArgument(std::string("no feature table for ") + to_string(node.kind));
  return ad::add(ad::gather_rows(*table, {vocab->lookup(node.key)}), ad::gather_rows(tables.position, {position_index}));
}

struct NodeAttentionResult {
  ad::Var output;                             // 1 x d
  std::vector<std::vector<double>> weights;   // [head][neighbor]
};

/// Multi-head node-level attention for one path type. Each head projects
/// target and neighbors with its own W (d/t x d), scores neighbors with
/// LeakyReLU(a [Wx_i || Wx_j]), softmax-normalizes, and returns the ELU of
/// the weighted sum of projected neighbors. Heads are concatenated.
class NodeLevelAttention {
 public:
  struct Head {
    ad::Var projection;  // d/t x d
    ad::Var score;       // 1 x 2d/t
  };

  NodeLevelAttention() = default;
  NodeLevelAttention(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t heads,
                     std::mt19937_64* rng)
      : dim_(dim) {
    if (heads == 0 || dim % heads != 0) throw InvalidArgument("dim must be divisible by heads");
    const std::size_t dh = dim / heads;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::string p = prefix + ".head" + std::to_string(h);
      Head head{store.add(p + ".W", dh, dim), store.add(p + ".a", 1, 2 * dh)};
      if (rng) {
        fill_uniform(head.projection, 1.0 / std::sqrt(static_cast<double>(dim)), *rng);
        fill_uniform(head.score, 1.0 / std::sqrt(static_cast<double>(2 * dh)), *rng);
      }
      heads_.push_back(std::move(head));
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Head>& heads() const noexcept { return heads_; }

  /// `target` is 1 x d, `neighbors` is n x d with n >= 1.
  NodeAttentionResult operator()(const ad::Var& target, const ad::Var& neighbors) const {
    if (target.rows() != 1 || target.cols() != dim_ || neighbors.cols() != dim_) {
      throw DimensionMismatch("node attention expects 1x" + std::to_string(dim_) + " target and nx" +
                              std::to_string(dim_) + " neighbors");
    }
    if (neighbors.rows() == 0) throw InvalidArgument("empty neighborhood");
    const std::size_t dh = dim_ / heads_.size();
    NodeAttentionResult result;
    std::vector<ad::Var> outs;
    for (const auto& head : heads_) {
      const auto target_proj = ad::matmul_nt(target, head.projection);       // 1 x dh
      const auto neighbor_proj = ad::matmul_nt(neighbors, head.projection);  // n x dh
      const auto self_score = ad::matmul_nt(target_proj, ad::slice_cols(head.score, 0, dh));
      const auto neighbor_score = ad::matmul_nt(neighbor_proj, ad::slice_cols(head.score, dh, dh));
      const auto scores = ad::leaky_relu(ad::transpose(ad::add(neighbor_score, self_score)));  // 1 x n
      const auto theta = ad::softmax_rows(scores);
      result.weights.push_back(theta.value());
      outs.push_back(ad::elu(ad::matmul(theta, neighbor_proj)));
    }
    result.output = outs.size() == 1 ? outs.front() : ad::concat_cols(outs);
    return result;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Head> heads_;
};

struct AttentionModuleResult {
  ad::Var output;               // n x d
  std::vector<double> weights;  // one per input
};

/// Semantic-level attention over v alternative representations of the same
/// n characters. Scores are q^T tanh(W h + b) averaged over the n rows,
/// softmax-normalized across the v inputs, then used to mix the inputs.
class AttentionModule {
 public:
  AttentionModule() = default;
  AttentionModule(ParamStore& store, const std::string& prefix, std::size_t dim, std::mt19937_64* rng)
      : dim_(dim), proj_(store, prefix, dim, dim, rng), query_(store.add(prefix + ".q", 1, dim)) {
    if (rng) fill_uniform(query_, 1.0 / std::sqrt(static_cast<double>(dim)), *rng);
  }

  AttentionModuleResult operator()(const std::vector<ad::Var>& inputs) const {
    if (inputs.empty()) throw InvalidArgument("attention module needs at least one input");
    for (const auto& h : inputs) {
      if (h.cols() != dim_ || h.rows() != inputs.front().rows()) {
        throw DimensionMismatch("attention module inputs must all be " + std::to_string(inputs.front().rows()) +
                                "x" + std::to_string(dim_));
      }
    }
    std::vector<ad::Var> scores;
    for (const auto& h : inputs) scores.push_back(ad::mean_rows(ad::matmul_nt(ad::tanh(proj_(h)), query_)));
    const auto delta = ad::softmax_rows(scores.size() == 1 ? scores.front() : ad::concat_cols(scores));
    AttentionModuleResult result;
    result.weights = delta.value();
    ad::Var mixed;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      const auto term = ad::mul(inputs[r], ad::slice_cols(delta, r, 1));
      mixed = mixed.defined() ? ad::add(mixed, term) : term;
    }
    result.output = mixed;
    return result;
  }

  const Linear& projection() const noexcept { return proj_; }
  const ad::Var& query() const noexcept { return query_; }

 private:
  std::size_t dim_ = 0;
  Linear proj_;
  ad::Var query_;
};

struct NodeRef {
  NodeId node;
  std::size_t position = 0;
};

/// Resolved attention inputs for one character.
struct CharacterNeighborhoods {
  NodeRef target;
  std::vector<NodeRef> semantic;
  std::vector<NodeRef> phonetic;
  std::vector<NodeRef> pronunciation;
};

/// Graphs for a character table together with the fixed per-character
/// pronunciation-neighbor samples.
class GraphContext {
 public:
  GraphContext(CharacterTable table, std::size_t neighbor_cap, std::uint64_t seed)
      : table_(std::move(table)), bundle_(table_), neighbor_cap_(neighbor_cap), seed_(seed) {
    for (const auto& rec : table_.records()) {
      samples_.emplace(rec.character, neighbor_sample(bundle_.pronunciation(), rec.character, neighbor_cap_, seed_));
    }
  }

  const CharacterTable& table() const noexcept { return table_; }
  const HetGraphBundle& bundle() const noexcept { return bundle_; }
  std::size_t neighbor_cap() const noexcept { return neighbor_cap_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Flat neighborhoods: hop-1 and hop-2 semantic components attend to the
  /// target directly. Empty graphs fall back to the target itself. The
  /// pronunciation neighborhood is the character's pronunciation node plus
  /// its sampled same-pronunciation characters.
  CharacterNeighborhoods neighborhoods(const std::string& ch) const {
    CharacterNeighborhoods n;
    n.target = {{NodeKind::character, ch}, 0};
    auto collect = [&](const ComponentGraph& g) {
      std::vector<NodeRef> out;
      for (const auto& node : g.neighborhood()) out.push_back({node, g.position(node)});
      return out;
    };
    n.semantic = collect(bundle_.semantic(ch));
    n.phonetic = collect(bundle_.phonetic(ch));
    const auto* rec = table_.find(ch);
    if (rec != nullptr && rec->pronunciation) {
      n.pronunciation.push_back({{NodeKind::pronunciation, rec->pronunciation->key()}, 0});
      for (const auto& nb : samples_.at(ch)) n.pronunciation.push_back({nb, 0});
    } else {
      n.pronunciation.push_back(n.target);
    }
    return n;
  }

 private:
  CharacterTable table_;
  HetGraphBundle bundle_;
  std::size_t neighbor_cap_;
  std::uint64_t seed_;
  std::map<std::string, std::vector<NodeId>> samples_;
};

struct ChgatLayerOutput {
  ad::Var z;                           // n x d, one row per character
  std::vector<double> structure_weights;  // empty when absent
  std::vector<double> aggregate_weights;  // empty when absent
};

class ChgatLayer {
 public:
  ChgatLayer() = default;
  ChgatLayer(ParamStore& store, VariantKind variant, const ModelVocab& vocab, std::size_t dim, std::size_t heads,
             std::mt19937_64* rng)
      : variant_(variant) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    auto table = [&](const std::string& name, std::size_t rows) {
      auto v = store.add("graph.embed." + name, rows, dim);
      if (rng) fill_uniform(v, bound, *rng);
      return v;
    };
    tables_.character = table("char", vocab.chars.size());
    tables_.semantic = table("sem", vocab.semantic.size());
    tables_.phonetic = table("phon", vocab.phonetic.size());
    if (variant != VariantKind::variant_1) tables_.pronunciation = table("pron", vocab.syllables.size());
    tables_.position = table("position", vocab.positions);
    tables_.vocab = &vocab;

    semantic_ = NodeLevelAttention(store, "graph.node.s", dim, heads, rng);
    phonetic_ = NodeLevelAttention(store, "graph.node.p", dim, heads, rng);
    if (variant != VariantKind::variant_1) pronunciation_ = NodeLevelAttention(store, "graph.node.pr", dim, heads, rng);
    if (variant != VariantKind::variant_2) structure_ = AttentionModule(store, "graph.structure_attn", dim, rng);
    if (variant != VariantKind::variant_1) aggregate_ = AttentionModule(store, "graph.aggregate_attn", dim, rng);
  }

  VariantKind variant() const noexcept { return variant_; }
  const EmbeddingTables& tables() const noexcept { return tables_; }
  void rebind_vocab(const ModelVocab& vocab) noexcept { tables_.vocab = &vocab; }

  ChgatLayerOutput operator()(const GraphContext& graphs, const std::vector<std::string>& name) const {
    std::vector<ad::Var> hs, hp, hpr;
    for (const auto& ch : name) {
      const auto nb = graphs.neighborhoods(ch);
      const auto target = embed(nb.target);
      hs.push_back(semantic_(target, embed_all(nb.semantic)).output);
      hp.push_back(phonetic_(target, embed_all(nb.phonetic)).output);
      if (variant_ != VariantKind::variant_1) hpr.push_back(pronunciation_(target, embed_all(nb.pronunciation)).output);
    }
    const auto Hs = ad::concat_rows(hs);
    const auto Hp = ad::concat_rows(hp);
    ChgatLayerOutput out;
    switch (variant_) {
      case VariantKind::full: {
        auto structure = structure_({Hs, Hp});
        auto aggregate = aggregate_({structure.output, ad::concat_rows(hpr)});
        out.z = aggregate.output;
        out.structure_weights = std::move(structure.weights);
        out.aggregate_weights = std::move(aggregate.weights);
        break;
      }
      case VariantKind::variant_1: {
        auto structure = structure_({Hs, Hp});
        out.z = structure.output;
        out.structure_weights = std::move(structure.weights);
        break;
      }
      case VariantKind::variant_2: {
        auto aggregate = aggregate_({Hs, Hp, ad::concat_rows(hpr)});
        out.z = aggregate.output;
        out.aggregate_weights = std::move(aggregate.weights);
        break;
      }
    }
    return out;
  }

 private:
  ad::Var embed(const NodeRef& ref) const { return initial_embedding(tables_, ref.node, ref.position); }

  ad::Var embed_all(const std::vector<NodeRef>& refs) const {
    std::vector<ad::Var> rows;
    rows.reserve(refs.size());
    for (const auto& r : refs) rows.push_back(embed(r));
    return rows.size() == 1 ? rows.front() : ad::concat_rows(rows);
  }

  VariantKind variant_ = VariantKind::full;
  EmbeddingTables tables_;
  NodeLevelAttention semantic_, phonetic_, pronunciation_;
  AttentionModule structure_, aggregate_;
};

}  // namespace chgat
