#pragma once

// Straight-line reference implementation of the CHGAT layer over plain
// arrays. It shares nothing with the library except parameter values,
// vocabulary indices and the raw character table, and rebuilds every
// neighborhood from the table rows itself.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "chgat/model.hpp"

namespace oracle {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  Vec row(std::size_t r) const { return Vec(v.begin() + r * cols, v.begin() + (r + 1) * cols); }
};

inline Mat param(const chgat::ParamStore& store, const std::string& name) {
  const auto& var = store.get(name);
  return {var.rows(), var.cols(), var.value()};
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

// y = W x with W stored out x in.
inline Vec matvec(const Mat& w, const Vec& x) {
  Vec y(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    for (std::size_t c = 0; c < w.cols; ++c) y[r] += w.at(r, c) * x[c];
  }
  return y;
}

inline double leaky(double x) { return x > 0 ? x : 0.2 * x; }
inline double elu(double x) { return x > 0 ? x : std::exp(x) - 1.0; }

inline Vec softmax(const Vec& s) {
  double mx = s[0];
  for (double x : s) mx = std::max(mx, x);
  Vec e(s.size());
  double z = 0;
  for (std::size_t i = 0; i < s.size(); ++i) z += e[i] = std::exp(s[i] - mx);
  for (auto& x : e) x /= z;
  return e;
}

inline Vec node_attention(const chgat::ParamStore& store, const std::string& prefix, std::size_t heads,
                          const Vec& target, const std::vector<Vec>& neighbors,
                          std::vector<Vec>* weights_out = nullptr) {
  const std::size_t dh = target.size() / heads;
  Vec out;
  for (std::size_t h = 0; h < heads; ++h) {
    const auto W = param(store, prefix + ".head" + std::to_string(h) + ".W");
    const auto a = param(store, prefix + ".head" + std::to_string(h) + ".a");
    const Vec gi = matvec(W, target);
    std::vector<Vec> gj;
    Vec scores;
    for (const auto& x : neighbors) {
      gj.push_back(matvec(W, x));
      double s = 0;
      for (std::size_t k = 0; k < dh; ++k) s += a.v[k] * gi[k] + a.v[dh + k] * gj.back()[k];
      scores.push_back(leaky(s));
    }
    const Vec theta = softmax(scores);
    if (weights_out) weights_out->push_back(theta);
    for (std::size_t k = 0; k < dh; ++k) {
      double acc = 0;
      for (std::size_t j = 0; j < gj.size(); ++j) acc += theta[j] * gj[j][k];
      out.push_back(elu(acc));
    }
  }
  return out;
}

/// inputs[r][i]: representation r of character i.
inline std::vector<Vec> attention_module(const chgat::ParamStore& store, const std::string& prefix,
                                         const std::vector<std::vector<Vec>>& inputs, Vec* delta_out = nullptr) {
  const auto W = param(store, prefix + ".W");
  const auto b = param(store, prefix + ".b");
  const auto q = param(store, prefix + ".q");
  const std::size_t n = inputs[0].size();
  Vec w;
  for (const auto& h : inputs) {
    double acc = 0;
    for (const auto& x : h) {
      const Vec y = matvec(W, x);
      for (std::size_t k = 0; k < y.size(); ++k) acc += q.v[k] * std::tanh(y[k] + b.v[k]);
    }
    w.push_back(acc / static_cast<double>(n));
  }
  const Vec delta = softmax(w);
  if (delta_out) *delta_out = delta;
  std::vector<Vec> out(n, Vec(inputs[0][0].size(), 0.0));
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < out[i].size(); ++k) out[i][k] += delta[r] * inputs[r][i][k];
    }
  }
  return out;
}

struct Neighbors {
  std::vector<Vec> semantic, phonetic, pronunciation;
  Vec target;
};

inline Neighbors neighbors_of(const chgat::ChgatModel& model, const std::string& ch) {
  const auto& store = model.parameters();
  const auto& vocab = model.vocab();
  const auto& table = model.graphs().table();
  const auto pos = param(store, "graph.embed.position");
  auto embed = [&](const std::string& table_name, const chgat::Vocabulary& v, const std::string& key,
                   std::size_t p) { return add(param(store, "graph.embed." + table_name).row(v.lookup(key)), pos.row(p)); };

  Neighbors n;
  n.target = embed("char", vocab.chars, ch, 0);
  const auto* rec = table.find(ch);

  // Semantic: direct semantic components, then those of components that are
  // themselves table characters; one node per glyph, first position wins.
  std::vector<std::pair<std::string, std::size_t>> sem;
  auto push_sem = [&](const std::string& glyph, std::size_t p) {
    for (const auto& [g, _] : sem)
      if (g == glyph) return;
    sem.emplace_back(glyph, p);
  };
  std::vector<std::string> hop1;
  if (rec) {
    for (const auto& c : rec->components) {
      if (c.role == chgat::ComponentRole::semantic) {
        push_sem(c.glyph, c.position_index);
        hop1.push_back(c.glyph);
      }
    }
    for (const auto& g : hop1) {
      if (const auto* sub = table.find(g)) {
        for (const auto& c : sub->components)
          if (c.role == chgat::ComponentRole::semantic) push_sem(c.glyph, c.position_index);
      }
    }
  }
  for (const auto& [g, p] : sem) n.semantic.push_back(embed("sem", vocab.semantic, g, p));
  if (n.semantic.empty()) n.semantic.push_back(n.target);

  if (rec) {
    for (const auto& c : rec->components)
      if (c.role == chgat::ComponentRole::phonetic) n.phonetic.push_back(embed("phon", vocab.phonetic, c.glyph, c.position_index));
  }
  if (n.phonetic.empty()) n.phonetic.push_back(n.target);

  if (rec && rec->pronunciation) {
    const auto key = rec->pronunciation->key();
    if (store.contains("graph.embed.pron")) n.pronunciation.push_back(embed("pron", vocab.syllables, key, 0));
    for (const auto& other : table.records()) {
      if (other.character != ch && other.pronunciation && other.pronunciation->key() == key) {
        n.pronunciation.push_back(embed("char", vocab.chars, other.character, 0));
      }
    }
  } else {
    n.pronunciation.push_back(n.target);
  }
  return n;
}

/// CHGAT layer output for the full variant, one vector per character.
inline std::vector<Vec> chgat_layer(const chgat::ChgatModel& model, const std::vector<std::string>& name) {
  const auto& store = model.parameters();
  const std::size_t t = model.config().heads;
  std::vector<Vec> hs, hp, hpr;
  for (const auto& ch : name) {
    const auto nb = neighbors_of(model, ch);
    hs.push_back(node_attention(store, "graph.node.s", t, nb.target, nb.semantic));
    hp.push_back(node_attention(store, "graph.node.p", t, nb.target, nb.phonetic));
    hpr.push_back(node_attention(store, "graph.node.pr", t, nb.target, nb.pronunciation));
  }
  const auto structure = attention_module(store, "graph.structure_attn", {hs, hp});
  return attention_module(store, "graph.aggregate_attn", {structure, hpr});
}

}  // namespace oracle
