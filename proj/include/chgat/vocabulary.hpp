#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "chgat/char_knowledge.hpp"
#include "chgat/error.hpp"
#include "chgat/utf8.hpp"

namespace chgat {

/// Token list with index 0 reserved for the shared unknown entry.
class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr const char* kUnknownToken = "<unk>";

  Vocabulary() : tokens_{kUnknownToken} {}

  /// Builds from arbitrary tokens; sorted and deduplicated for determinism.
  static Vocabulary from_tokens(std::set<std::string> tokens) {
    Vocabulary v;
    tokens.erase(kUnknownToken);
    for (const auto& t : tokens) v.push(t);
    return v;
  }

  /// Restores a manifest written by `tokens()`; the first entry must be the
  /// unknown marker.
  static Vocabulary from_manifest(const std::vector<std::string>& manifest) {
    if (manifest.empty() || manifest.front() != kUnknownToken) {
      throw CheckpointError("vocabulary manifest must start with " + std::string(kUnknownToken));
    }
    Vocabulary v;
    for (std::size_t i = 1; i < manifest.size(); ++i) {
      if (v.index_.count(manifest[i])) throw CheckpointError("duplicate vocabulary entry " + manifest[i]);
      v.push(manifest[i]);
    }
    return v;
  }

  std::size_t lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnknown : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void push(const std::string& t) {
    index_.emplace(t, tokens_.size());
    tokens_.push_back(t);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ModelVocab {
  Vocabulary chars;
  Vocabulary semantic;
  Vocabulary phonetic;
  Vocabulary syllables;
  std::size_t positions = 1;  // one more than the largest component position

  friend bool operator==(const ModelVocab&, const ModelVocab&) = default;
};

/// Vocabularies over a character table plus the characters of training names.
inline ModelVocab build_vocab(const CharacterTable& table, const std::vector<std::string>& names) {
  std::set<std::string> chars, sem, phon, syl;
  std::size_t max_pos = 0;
  for (const auto& rec : table.records()) {
    chars.insert(rec.character);
    if (rec.pronunciation) syl.insert(rec.pronunciation->key());
    for (const auto& c : rec.components) {
      (c.role == ComponentRole::semantic ? sem : phon).insert(c.glyph);
      max_pos = std::max(max_pos, c.position_index);
    }
  }
  for (const auto& name : names) {
    auto parts = utf8::split(name);
    if (!parts) throw InvalidArgument("name is not valid UTF-8");
    chars.insert(parts->begin(), parts->end());
  }
  ModelVocab v;
  v.chars = Vocabulary::from_tokens(std::move(chars));
  v.semantic = Vocabulary::from_tokens(std::move(sem));
  v.phonetic = Vocabulary::from_tokens(std::move(phon));
  v.syllables = Vocabulary::from_tokens(std::move(syl));
  v.positions = max_pos + 1;
  return v;
}

}  // namespace chgat
