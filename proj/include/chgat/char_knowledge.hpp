#pragma once

// Character decomposition facts: formation layouts, semantic/phonetic
// components, and toned pinyin. Tables are immutable after loading.

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chgat/error.hpp"
#include "chgat/utf8.hpp"

namespace chgat {

/// One of the 17 spatial layouts a character's components combine in.
class FormationType {
 public:
  static constexpr int kCount = 17;
  static constexpr int kIntegral = 12;

  FormationType() = default;
  explicit FormationType(int index) : index_(index) {
    if (index < 1 || index > kCount) {
      throw InvalidArgument("formation index out of range: " + std::to_string(index));
    }
  }

  int index() const noexcept { return index_; }
  bool is_integral() const noexcept { return index_ == kIntegral; }

  std::string_view name() const noexcept { return kNames[static_cast<std::size_t>(index_ - 1)]; }

  // Component slots implied by the layout. The two free-form layouts
  // (multielement combination / stacking) allow up to eight.
  std::size_t slots() const noexcept { return kSlots[static_cast<std::size_t>(index_ - 1)]; }

  friend bool operator==(FormationType a, FormationType b) noexcept { return a.index_ == b.index_; }

 private:
  static constexpr std::array<std::string_view, kCount> kNames = {
      "left to right",
      "left to middle and right",
      "above to below",
      "above to middle and below",
      "full surround",
      "surround from above",
      "surround from below",
      "surround from left",
      "surround from upper left",
      "surround from upper right",
      "surround from lower left",
      "integral",
      "isosceles triangle layout",
      "square layout",
      "multielement combination",
      "overlaid",
      "multielement stacking",
  };
  static constexpr std::array<std::size_t, kCount> kSlots = {2, 3, 2, 3, 2, 2, 2, 2, 2,
                                                             2, 2, 1, 3, 4, 8, 2, 8};

  int index_ = kIntegral;
};

enum class ComponentRole { semantic, phonetic };

struct ComponentRef {
  std::string glyph;
  ComponentRole role = ComponentRole::semantic;
  std::size_t position_index = 0;

  friend bool operator==(const ComponentRef&, const ComponentRef&) = default;
};

/// Toned pinyin syllable, e.g. "zhu" + 1. Tone 0 means unknown.
class PinyinSyllable {
 public:
  PinyinSyllable(std::string syllable, int tone) : syllable_(std::move(syllable)), tone_(tone) {
    if (syllable_.empty()) throw InvalidArgument("empty pinyin syllable");
    for (char c : syllable_) {
      if (c < 'a' || c > 'z') throw InvalidArgument("pinyin must be lowercase ASCII letters: " + syllable_);
    }
    if (tone < 0 || tone > 5) throw InvalidArgument("tone out of range: " + std::to_string(tone));
  }

  /// Parses "zhu1" style text (letters followed by one tone digit).
  static PinyinSyllable parse(std::string_view text) {
    if (text.size() < 2 || !std::isdigit(static_cast<unsigned char>(text.back()))) {
      throw InvalidArgument("pinyin needs a trailing tone digit: " + std::string(text));
    }
    return PinyinSyllable(std::string(text.substr(0, text.size() - 1)), text.back() - '0');
  }

  const std::string& syllable() const noexcept { return syllable_; }
  int tone() const noexcept { return tone_; }
  std::string key() const { return syllable_ + std::to_string(tone_); }

  friend bool operator==(const PinyinSyllable&, const PinyinSyllable&) = default;

 private:
  std::string syllable_;
  int tone_ = 0;
};

struct CharacterRecord {
  std::string character;
  FormationType formation;
  std::vector<ComponentRef> components;
  std::optional<PinyinSyllable> pronunciation;  // absent only for synthetic OOV records
  bool is_picto_phonetic = false;

  friend bool operator==(const CharacterRecord&, const CharacterRecord&) = default;

  std::size_t phonetic_count() const {
    return static_cast<std::size_t>(std::count_if(components.begin(), components.end(), [](const ComponentRef& c) {
      return c.role == ComponentRole::phonetic;
    }));
  }
};

class CharacterTable {
 public:
  CharacterTable() = default;

  /// Inserts a record; rejects duplicates. `line` is used for diagnostics.
  void insert(CharacterRecord record, std::size_t line = 0) {
    if (index_.count(record.character) != 0) throw DuplicateCharacter(line, record.character);
    index_.emplace(record.character, records_.size());
    records_.push_back(std::move(record));
  }

  const CharacterRecord* find(std::string_view ch) const {
    auto it = index_.find(std::string(ch));
    return it == index_.end() ? nullptr : &records_[it->second];
  }

  bool contains(std::string_view ch) const { return find(ch) != nullptr; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  /// Records in file order.
  const std::vector<CharacterRecord>& records() const noexcept { return records_; }

  friend bool operator==(const CharacterTable& a, const CharacterTable& b) { return a.records_ == b.records_; }

 private:
  std::vector<CharacterRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::vector<std::string> split_on(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

inline bool parse_size(std::string_view text, std::size_t& out) {
  if (text.empty() || text.size() > 18) return false;
  std::size_t v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

/// Parses one non-comment TSV line into a validated record.
inline CharacterRecord parse_character_line(std::string_view line, std::size_t line_no) {
  auto fields = detail::split_on(line, '\t');
  if (fields.size() == 3) fields.emplace_back();
  if (fields.size() != 4) throw ParseError(line_no, "expected 4 tab-separated fields");

  CharacterRecord rec;
  if (!utf8::is_single_code_point(fields[0])) throw ParseError(line_no, "character field must be one code point");
  rec.character = fields[0];

  std::size_t formation = 0;
  if (!detail::parse_size(fields[1], formation) || formation < 1 || formation > FormationType::kCount) {
    throw ParseError(line_no, "formation index must be 1-17, got '" + fields[1] + "'");
  }
  rec.formation = FormationType(static_cast<int>(formation));

  try {
    rec.pronunciation = PinyinSyllable::parse(fields[2]);
  } catch (const InvalidArgument& e) {
    throw ParseError(line_no, e.what());
  }

  if (!fields[3].empty()) {
    for (const auto& entry : detail::split_on(fields[3], ';')) {
      const auto parts = detail::split_on(entry, ':');
      if (parts.size() != 3) throw ParseError(line_no, "component must be ROLE:GLYPH:POSITION, got '" + entry + "'");
      ComponentRef comp;
      if (parts[0] == "S") {
        comp.role = ComponentRole::semantic;
      } else if (parts[0] == "P") {
        comp.role = ComponentRole::phonetic;
      } else {
        throw ParseError(line_no, "component role must be S or P, got '" + parts[0] + "'");
      }
      if (!utf8::is_single_code_point(parts[1])) throw ParseError(line_no, "component glyph must be one code point");
      comp.glyph = parts[1];
      if (!detail::parse_size(parts[2], comp.position_index)) {
        throw ParseError(line_no, "bad component position '" + parts[2] + "'");
      }
      if (comp.position_index >= rec.formation.slots()) {
        throw ParseError(line_no, "position " + parts[2] + " exceeds the " +
                                      std::to_string(rec.formation.slots()) + " slots of formation " +
                                      fields[1]);
      }
      rec.components.push_back(std::move(comp));
    }
  }

  if (rec.components.empty() && !rec.formation.is_integral()) {
    throw ParseError(line_no, "empty components are only allowed for integral characters (formation 12)");
  }
  const auto phonetic = rec.phonetic_count();
  if (phonetic > 1) throw ParseError(line_no, "more than one phonetic component");
  rec.is_picto_phonetic = phonetic == 1;
  return rec;
}

inline CharacterTable read_character_table(std::istream& in) {
  CharacterTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    table.insert(parse_character_line(line, line_no), line_no);
  }
  return table;
}

inline CharacterTable parse_character_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_character_table(in);
}

inline CharacterTable load_character_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing(path);
  return read_character_table(in);
}

/// Serializes a table back to the TSV format it was loaded from.
inline std::string to_tsv(const CharacterTable& table) {
  std::string out;
  for (const auto& rec : table.records()) {
    out += rec.character;
    out += '\t';
    out += std::to_string(rec.formation.index());
    out += '\t';
    if (!rec.pronunciation) throw InvalidArgument("cannot serialize " + rec.character + " without a pronunciation");
    out += rec.pronunciation->key();
    out += '\t';
    for (std::size_t i = 0; i < rec.components.size(); ++i) {
      const auto& c = rec.components[i];
      if (i) out += ';';
      out += c.role == ComponentRole::semantic ? "S:" : "P:";
      out += c.glyph;
      out += ':';
      out += std::to_string(c.position_index);
    }
    out += '\n';
  }
  return out;
}

/// Total lookup: characters outside the table get a synthetic integral
/// record with no components and no pronunciation.
inline CharacterRecord decompose(const CharacterTable& table, std::string_view ch) {
  if (const auto* rec = table.find(ch)) return *rec;
  CharacterRecord synthetic;
  synthetic.character = std::string(ch);
  synthetic.formation = FormationType(FormationType::kIntegral);
  return synthetic;
}

struct HopComponent {
  ComponentRef ref;
  int hop = 1;
  std::string parent;  // the character (hop 1) or hop-1 component (hop 2) it hangs off

  friend bool operator==(const HopComponent&, const HopComponent&) = default;
};

/// Direct semantic components plus the semantic components of those that
/// are themselves characters in the table. Depth is exactly two.
/// Deduplicated by (glyph, hop), first occurrence wins.
inline std::vector<HopComponent> two_hop_semantic_components(const CharacterTable& table, std::string_view ch) {
  std::vector<HopComponent> out;
  std::set<std::pair<std::string, int>> seen;
  const CharacterRecord rec = decompose(table, ch);
  std::vector<const ComponentRef*> hop1;
  for (const auto& c : rec.components) {
    if (c.role != ComponentRole::semantic) continue;
    if (!seen.emplace(c.glyph, 1).second) continue;
    out.push_back({c, 1, rec.character});
    hop1.push_back(&c);
  }
  for (const auto* parent : hop1) {
    const auto* sub = table.find(parent->glyph);
    if (sub == nullptr) continue;
    for (const auto& c : sub->components) {
      if (c.role != ComponentRole::semantic) continue;
      if (!seen.emplace(c.glyph, 2).second) continue;
      out.push_back({c, 2, parent->glyph});
    }
  }
  return out;
}

}  // namespace chgat
