#pragma once

// Dense building blocks shared by the text encoders and the sequence encoder.
// Constructors register their parameters under a name prefix; when given an
// RNG they also initialize them (nullptr leaves zeros for checkpoint loads).

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "chgat/autograd.hpp"
#include "chgat/params.hpp"

namespace chgat {

enum class Mode { eval, train };

/// Per-forward state: mode plus the dropout RNG used in training.
struct ForwardContext {
  Mode mode = Mode::eval;
  std::mt19937_64* rng = nullptr;
  double dropout = 0.0;

  ad::Var maybe_dropout(const ad::Var& x) const {
    if (mode != Mode::train || rng == nullptr || dropout <= 0.0) return x;
    return ad::dropout(x, dropout, *rng);
  }
};

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, std::mt19937_64* rng,
         bool bias = true)
      : weight_(store.add(prefix + ".W", out, in)) {
    if (bias) bias_ = store.add(prefix + ".b", 1, out);
    if (rng) fill_uniform(weight_, 1.0 / std::sqrt(static_cast<double>(in)), *rng);
  }

  ad::Var operator()(const ad::Var& x) const {
    auto y = ad::matmul_nt(x, weight_);
    return bias_.defined() ? ad::add(y, bias_) : y;
  }

  const ad::Var& weight() const noexcept { return weight_; }
  const ad::Var& bias() const noexcept { return bias_; }

 private:
  ad::Var weight_;
  ad::Var bias_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& prefix, std::size_t dim, std::mt19937_64* rng)
      : gamma_(store.add(prefix + ".gamma", 1, dim)), beta_(store.add(prefix + ".beta", 1, dim)) {
    if (rng) fill_constant(gamma_, 1.0);
  }

  ad::Var operator()(const ad::Var& x) const { return ad::layer_norm(x, gamma_, beta_); }

 private:
  ad::Var gamma_;
  ad::Var beta_;
};

/// Post-norm transformer encoder block: multi-head self-attention and a
/// GELU feed-forward, each followed by residual add and layer norm.
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t heads,
                   std::size_t ffn_dim, std::mt19937_64* rng)
      : dim_(dim),
        heads_(heads),
        q_(store, prefix + ".attn.q", dim, dim, rng),
        k_(store, prefix + ".attn.k", dim, dim, rng),
        v_(store, prefix + ".attn.v", dim, dim, rng),
        o_(store, prefix + ".attn.o", dim, dim, rng),
        ln1_(store, prefix + ".ln1", dim, rng),
        ffn_in_(store, prefix + ".ffn.in", dim, ffn_dim, rng),
        ffn_out_(store, prefix + ".ffn.out", ffn_dim, dim, rng),
        ln2_(store, prefix + ".ln2", dim, rng) {}

  ad::Var operator()(const ad::Var& x, const ForwardContext& ctx) const {
    const std::size_t dh = dim_ / heads_;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto q = q_(x), k = k_(x), v = v_(x);
    std::vector<ad::Var> heads;
    heads.reserve(heads_);
    for (std::size_t h = 0; h < heads_; ++h) {
      const auto qh = ad::slice_cols(q, h * dh, dh);
      const auto kh = ad::slice_cols(k, h * dh, dh);
      const auto vh = ad::slice_cols(v, h * dh, dh);
      const auto weights = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt));
      heads.push_back(ad::matmul(weights, vh));
    }
    const auto attended = o_(heads_ == 1 ? heads.front() : ad::concat_cols(heads));
    const auto h1 = ln1_(ad::add(x, ctx.maybe_dropout(attended)));
    const auto ff = ffn_out_(ad::gelu(ffn_in_(h1)));
    return ln2_(ad::add(h1, ctx.maybe_dropout(ff)));
  }

 private:
  std::size_t dim_ = 0;
  std::size_t heads_ = 1;
  Linear q_, k_, v_, o_;
  LayerNorm ln1_;
  Linear ffn_in_, ffn_out_;
  LayerNorm ln2_;
};

/// BERT-style token encoder: token + learned position embeddings, layer
/// norm, then a stack of transformer blocks. One row per input token.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(ParamStore& store, const std::string& prefix, std::size_t vocab, std::size_t max_len, std::size_t dim,
              std::size_t heads, std::size_t layers, std::mt19937_64* rng)
      : token_(store.add(prefix + ".token", vocab, dim)), position_(store.add(prefix + ".position", max_len, dim)) {
    if (rng) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
      fill_uniform(token_, bound, *rng);
      fill_uniform(position_, bound, *rng);
    }
    norm_ = LayerNorm(store, prefix + ".ln", dim, rng);
    for (std::size_t i = 0; i < layers; ++i) {
      layers_.emplace_back(store, prefix + ".layer" + std::to_string(i), dim, heads, 4 * dim, rng);
    }
  }

  ad::Var operator()(const std::vector<std::size_t>& tokens, const ForwardContext& ctx) const {
    std::vector<std::size_t> positions(tokens.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    auto x = norm_(ad::add(ad::gather_rows(token_, tokens), ad::gather_rows(position_, positions)));
    x = ctx.maybe_dropout(x);
    for (const auto& layer : layers_) x = layer(x, ctx);
    return x;
  }

 private:
  ad::Var token_;
  ad::Var position_;
  LayerNorm norm_;
  std::vector<TransformerLayer> layers_;
};

}  // namespace chgat
