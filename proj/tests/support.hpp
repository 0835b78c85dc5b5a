#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "chgat/char_knowledge.hpp"
#include "chgat/model.hpp"
#include "chgat/name_dataset.hpp"
#include "chgat/utf8.hpp"
#include "chgat/vocabulary.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(CHGAT_TEST_DATA) + "/" + name; }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("chgat_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::string str(const std::string& child = "") const { return child.empty() ? path_.string() : (path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

/// Encodes one code point as UTF-8.
inline std::string code_point(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

inline chgat::CharacterTable small_table() { return chgat::load_character_table(data_path("chars_small.tsv")); }

/// Three characters, used where a minimal vocabulary is wanted.
inline chgat::CharacterTable three_char_table() {
  return chgat::parse_character_table(
      "珠\t1\tzhu1\tS:王:0;P:朱:1\n"
      "珍\t1\tzhen1\tS:王:0;P:㐱:1\n"
      "株\t1\tzhu1\tS:木:0;P:朱:1\n");
}

inline chgat::ModelConfig tiny_config(std::size_t dim = 4, std::size_t heads = 2) {
  chgat::ModelConfig c;
  c.dim = dim;
  c.heads = heads;
  c.encoder_layers = 2;
  c.text_layers = 1;
  c.dropout = 0.0;
  return c;
}

inline chgat::ChgatModel tiny_model(chgat::VariantKind variant = chgat::VariantKind::full, std::uint64_t seed = 7,
                                    std::size_t dim = 4, std::size_t heads = 2) {
  auto table = small_table();
  auto vocab = chgat::build_vocab(table, {});
  return chgat::ChgatModel::create(tiny_config(dim, heads), variant, std::move(table), std::move(vocab), seed);
}

/// A synthetic decomposition table of `n` characters: integral component
/// glyphs plus composed characters, most of them picto-phonetic, with
/// pronunciations drawn from a small syllable pool so that meta-path
/// cliques form.
inline std::string synthetic_table_tsv(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> syllables{"ba", "ma", "zhu", "li", "mei", "wang", "fen", "lin", "hua", "jun"};
  std::string tsv;
  const std::size_t base_components = 24;
  std::vector<std::string> components;
  for (std::size_t i = 0; i < base_components; ++i) {
    const auto g = code_point(0x4E00 + static_cast<char32_t>(i));
    components.push_back(g);
    tsv += g + "\t12\t" + syllables[rng() % syllables.size()] + std::to_string(1 + rng() % 4) + "\t\n";
  }
  for (std::size_t i = base_components; i < n; ++i) {
    const auto ch = code_point(0x5000 + static_cast<char32_t>(i));
    const auto sem = components[rng() % components.size()];
    const auto other = components[rng() % components.size()];
    const auto pron = syllables[rng() % syllables.size()] + std::to_string(1 + rng() % 4);
    const auto kind = rng() % 10;
    if (kind < 8) {
      tsv += ch + "\t1\t" + pron + "\tS:" + sem + ":0;P:" + other + ":1\n";
    } else if (kind == 8) {
      tsv += ch + "\t1\t" + pron + "\tS:" + sem + ":0;S:" + other + ":1\n";
    } else {
      // Builds on an earlier composed character so hop-2 paths exist.
      const auto prev = code_point(0x5000 + static_cast<char32_t>(base_components + rng() % (i - base_components + 1)));
      if (prev == ch) {
        tsv += ch + "\t12\t" + pron + "\t\n";
      } else {
        tsv += ch + "\t3\t" + pron + "\tS:" + prev + ":0;S:" + sem + ":1\n";
      }
    }
  }
  return tsv;
}

/// Synthetic two-character name corpus whose gender is decided by an
/// engineered rule: female iff the first character carries a "female"
/// semantic component or the second character has a "female" pronunciation.
struct ToyCorpus {
  std::string table_tsv;
  chgat::CharacterTable table;
  std::vector<std::string> chars;
  std::set<std::string> female_semantic;   // characters with a female radical
  std::set<std::string> female_sound;      // characters with a female syllable
  std::vector<chgat::LabeledExample> train;
  std::vector<chgat::LabeledExample> held_out;

  int rule(const std::string& a, const std::string& b) const {
    return female_semantic.count(a) || female_sound.count(b) ? 1 : 0;
  }
};

inline ToyCorpus make_toy_corpus(std::uint64_t seed = 2024, std::size_t n_chars = 40, std::size_t n_names = 200,
                                 std::size_t n_train = 150) {
  std::mt19937_64 rng(seed);
  ToyCorpus c;
  std::vector<std::string> radicals, phonetics;
  for (int i = 0; i < 8; ++i) radicals.push_back(code_point(0x4E00 + static_cast<char32_t>(i)));
  for (int i = 0; i < 10; ++i) phonetics.push_back(code_point(0x4F00 + static_cast<char32_t>(i)));
  const std::vector<std::string> syllables{"ba1", "ma2", "zhu1", "li4", "mei3", "wang2", "fen2", "lin2", "hua1", "jun1"};
  // Radicals 0-1 and syllables 0-2 are the "female" ones: about 25-30% each.
  for (std::size_t i = 0; i < n_chars; ++i) {
    const auto ch = code_point(0x5000 + static_cast<char32_t>(i));
    const std::size_t r = rng() % radicals.size();
    const std::size_t s = rng() % syllables.size();
    c.table_tsv += ch + "\t1\t" + syllables[s] + "\tS:" + radicals[r] + ":0;P:" + phonetics[s] + ":1\n";
    c.chars.push_back(ch);
    if (r < 2) c.female_semantic.insert(ch);
    if (s < 3) c.female_sound.insert(ch);
  }
  c.table = chgat::parse_character_table(c.table_tsv);
  std::set<std::string> used;
  std::vector<chgat::LabeledExample> all;
  while (all.size() < n_names) {
    const auto& a = c.chars[rng() % c.chars.size()];
    const auto& b = c.chars[rng() % c.chars.size()];
    if (a == b || !used.insert(a + b).second) continue;
    all.push_back({a + b, c.rule(a, b), 1});
  }
  c.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  c.held_out.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  return c;
}

inline std::vector<std::string> names_of(const std::vector<chgat::LabeledExample>& ex) {
  std::vector<std::string> out;
  for (const auto& e : ex) out.push_back(e.first_name);
  return out;
}

}  // namespace testing_support
