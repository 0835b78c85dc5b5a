#pragma once

// End-to-end name classifier: CHGAT layer output plus a character text
// encoder, concatenated with a pronunciation text encoder, projected back to
// d, run through a transformer encoder, mean-pooled and classified.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chgat/autograd.hpp"
#include "chgat/chgat_layer.hpp"
#include "chgat/layers.hpp"
#include "chgat/params.hpp"
#include "chgat/vocabulary.hpp"

namespace chgat {

struct ModelConfig {
  std::size_t dim = 768;
  std::size_t heads = 6;
  std::size_t encoder_layers = 2;
  std::size_t text_layers = 1;
  std::size_t max_name_len = 3;
  double dropout = 0.1;
  std::size_t neighbor_cap = 64;

  void validate() const {
    if (dim == 0 || heads == 0) throw InvalidArgument("dim and heads must be positive");
    if (dim % heads != 0) throw InvalidArgument("dim " + std::to_string(dim) + " not divisible by heads " +
                                                std::to_string(heads));
    if (encoder_layers == 0) throw InvalidArgument("encoder_layers must be positive");
    if (max_name_len == 0) throw InvalidArgument("max_name_len must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
    if (neighbor_cap == 0) throw InvalidArgument("neighbor_cap must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// 1 = female, 0 = male.
struct Prediction {
  int label = 0;
  double probability = 0.0;         // of `label`
  double female_probability = 0.0;
};

inline Prediction prediction_from_logits(double male_logit, double female_logit) {
  const double p_female = 1.0 / (1.0 + std::exp(male_logit - female_logit));
  Prediction p;
  p.label = female_logit > male_logit ? 1 : 0;
  p.female_probability = p_female;
  p.probability = p.label == 1 ? p_female : 1.0 - p_female;
  return p;
}

inline std::vector<std::string> split_name(const std::string& name) {
  auto parts = utf8::split(name);
  if (!parts) throw InvalidArgument("name is not valid UTF-8");
  return std::move(*parts);
}

class ChgatModel {
 public:
  /// Builds a model with freshly initialized parameters. `seed` drives both
  /// initialization and the pronunciation-neighbor samples.
  static ChgatModel create(const ModelConfig& config, VariantKind variant, CharacterTable table, ModelVocab vocab,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ChgatModel m(config, variant, std::move(table), std::move(vocab), seed, &rng);
    m.params_.round_to_float();
    return m;
  }

  /// Builds the same architecture with zeroed parameters, for loading.
  static ChgatModel uninitialized(const ModelConfig& config, VariantKind variant, CharacterTable table,
                                  ModelVocab vocab, std::uint64_t seed) {
    return ChgatModel(config, variant, std::move(table), std::move(vocab), seed, nullptr);
  }

  ChgatModel(ChgatModel&&) = default;
  ChgatModel& operator=(ChgatModel&&) = default;

  const ModelConfig& config() const noexcept { return config_; }
  double dropout_rate() const noexcept { return config_.dropout; }
  VariantKind variant() const noexcept { return variant_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const ModelVocab& vocab() const noexcept { return *vocab_; }
  const GraphContext& graphs() const noexcept { return *graphs_; }
  const ChgatLayer& chgat_layer() const noexcept { return chgat_; }
  ParamStore& parameters() noexcept { return params_; }
  const ParamStore& parameters() const noexcept { return params_; }

  void check_length(std::size_t n) const {
    if (n == 0) throw EmptyName();
    if (n > config_.max_name_len) throw NameTooLong(n, config_.max_name_len);
  }

  /// CHGAT layer output for a name, one row per character.
  ChgatLayerOutput graph_representation(const std::vector<std::string>& chars) const {
    check_length(chars.size());
    return chgat_(*graphs_, chars);
  }

  /// Two logits (male, female) as a 1 x 2 row.
  ad::Var logits(const std::vector<std::string>& chars, const ForwardContext& ctx) const {
    check_length(chars.size());
    const auto z = chgat_(*graphs_, chars).z;
    std::vector<std::size_t> char_tokens, pron_tokens;
    for (const auto& ch : chars) {
      char_tokens.push_back(vocab_->chars.lookup(ch));
      const auto* rec = graphs_->table().find(ch);
      pron_tokens.push_back(rec && rec->pronunciation ? vocab_->syllables.lookup(rec->pronunciation->key())
                                                      : Vocabulary::kUnknown);
    }
    const auto text = text_char_(char_tokens, ctx);
    const auto pron = text_pron_(pron_tokens, ctx);
    auto x = fusion_(ad::concat_cols({ad::add(z, text), pron}));
    x = ctx.maybe_dropout(x);
    for (const auto& layer : encoder_) x = layer(x, ctx);
    return classifier_(ad::mean_rows(x));
  }

  ad::Var forward(const std::string& name) const { return logits(split_name(name), ForwardContext{}); }

  Prediction predict(const std::string& name) const {
    const auto l = forward(name);
    return prediction_from_logits(l.value()[0], l.value()[1]);
  }

 private:
  ChgatModel(const ModelConfig& config, VariantKind variant, CharacterTable table, ModelVocab vocab,
             std::uint64_t seed, std::mt19937_64* rng)
      : config_(config),
        variant_(variant),
        seed_(seed),
        vocab_(std::make_shared<const ModelVocab>(std::move(vocab))),
        graphs_(std::make_shared<const GraphContext>(std::move(table), config.neighbor_cap, seed)) {
    config_.validate();
    const std::size_t d = config_.dim, t = config_.heads;
    chgat_ = ChgatLayer(params_, variant_, *vocab_, d, t, rng);
    text_char_ = TextEncoder(params_, "text_char", vocab_->chars.size(), config_.max_name_len, d, t,
                             config_.text_layers, rng);
    text_pron_ = TextEncoder(params_, "text_pron", vocab_->syllables.size(), config_.max_name_len, d, t,
                             config_.text_layers, rng);
    fusion_ = Linear(params_, "fusion", 2 * d, d, rng);
    for (std::size_t i = 0; i < config_.encoder_layers; ++i) {
      encoder_.emplace_back(params_, "encoder.layer" + std::to_string(i), d, t, 4 * d, rng);
    }
    classifier_ = Linear(params_, "classifier", d, 2, rng);
  }

  ModelConfig config_;
  VariantKind variant_;
  std::uint64_t seed_;
  std::shared_ptr<const ModelVocab> vocab_;
  std::shared_ptr<const GraphContext> graphs_;
  ParamStore params_;
  ChgatLayer chgat_;
  TextEncoder text_char_, text_pron_;
  Linear fusion_;
  std::vector<TransformerLayer> encoder_;
  Linear classifier_;
};

/// A model of the requested ablation variant.
inline ChgatModel build_variant(const ModelConfig& config, VariantKind kind, CharacterTable table, ModelVocab vocab,
                                std::uint64_t seed) {
  return ChgatModel::create(config, kind, std::move(table), std::move(vocab), seed);
}

inline ChgatModel build_variant(const ModelConfig& config, const std::string& kind, CharacterTable table,
                                ModelVocab vocab, std::uint64_t seed) {
  return build_variant(config, parse_variant(kind), std::move(table), std::move(vocab), seed);
}

/// Summed binary cross-entropy of a batch of logits against labels.
inline ad::Var loss(const ad::Var& logits, const std::vector<int>& labels) {
  return ad::binary_cross_entropy(logits, labels, std::vector<double>(labels.size(), 1.0));
}

inline ad::Var loss(const ad::Var& logits, const std::vector<int>& labels, const std::vector<double>& weights) {
  return ad::binary_cross_entropy(logits, labels, weights);
}

}  // namespace chgat
