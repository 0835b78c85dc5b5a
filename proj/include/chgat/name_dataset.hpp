#pragma once

// Name-gender frequency records: loading, label derivation, splitting and
// corpus statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "chgat/char_knowledge.hpp"
#include "chgat/error.hpp"
#include "chgat/utf8.hpp"

namespace chgat {

inline constexpr std::size_t kMaxFirstNameLength = 3;

struct NameRecord {
  std::string first_name;
  std::uint64_t male_count = 0;
  std::uint64_t female_count = 0;

  friend bool operator==(const NameRecord&, const NameRecord&) = default;
};

/// label 1 = female, 0 = male.
struct LabeledExample {
  std::string first_name;
  int label = 0;
  std::uint64_t weight = 1;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

inline std::vector<NameRecord> read_name_records(std::istream& in) {
  std::vector<NameRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!header) {
      if (line != "name,male,female") throw ParseError(line_no, "expected header 'name,male,female'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = detail::split_on(line, ',');
    if (fields.size() != 3) throw ParseError(line_no, "expected 3 comma-separated fields");
    NameRecord rec;
    rec.first_name = fields[0];
    std::size_t m = 0, f = 0;
    if (!detail::parse_size(fields[1], m) || !detail::parse_size(fields[2], f)) {
      throw ParseError(line_no, "counts must be non-negative integers");
    }
    rec.male_count = m;
    rec.female_count = f;
    const auto chars = utf8::split(rec.first_name);
    if (!chars) throw ParseError(line_no, "name is not valid UTF-8");
    if (chars->empty()) throw InvariantViolation(line_no, "empty first name");
    if (chars->size() > kMaxFirstNameLength) {
      throw InvariantViolation(line_no, "first name '" + rec.first_name + "' has more than 3 characters");
    }
    if (m + f == 0) throw InvariantViolation(line_no, "name '" + rec.first_name + "' has zero occurrences");
    if (!seen.insert(rec.first_name).second) throw ParseError(line_no, "duplicate name '" + rec.first_name + "'");
    out.push_back(std::move(rec));
  }
  if (!header) throw ParseError(1, "missing header");
  return out;
}

inline std::vector<NameRecord> parse_name_records(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_name_records(in);
}

inline std::vector<NameRecord> load_name_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing(path);
  return read_name_records(in);
}

inline void write_examples_csv(std::ostream& out, const std::vector<LabeledExample>& examples) {
  out << "name,male,female\n";
  for (const auto& e : examples) {
    out << e.first_name << ',' << (e.label == 0 ? e.weight : 0) << ',' << (e.label == 1 ? e.weight : 0) << '\n';
  }
}

/// Majority label; nullopt on an exact tie.
inline std::optional<int> majority_label(const NameRecord& r) {
  if (r.female_count == r.male_count) return std::nullopt;
  return r.female_count > r.male_count ? 1 : 0;
}

struct LabelResult {
  std::vector<LabeledExample> examples;
  std::size_t ties = 0;
};

inline LabelResult derive_labels(const std::vector<NameRecord>& records) {
  LabelResult out;
  for (const auto& r : records) {
    const auto label = majority_label(r);
    if (!label) {
      ++out.ties;
      continue;
    }
    out.examples.push_back({r.first_name, *label, r.male_count + r.female_count});
  }
  return out;
}

struct DataSplits {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> val;
  std::vector<LabeledExample> test;
};

/// Seeded shuffle then partition. Examples are unique by name, so the
/// partition is disjoint by name. The input order does not matter.
inline DataSplits split(std::vector<LabeledExample> examples, std::array<double, 3> ratios, std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw InvalidArgument("split ratios must be non-negative and sum to 1");
  }
  std::sort(examples.begin(), examples.end(),
            [](const LabeledExample& a, const LabeledExample& b) { return a.first_name < b.first_name; });
  std::mt19937_64 rng(seed);
  std::shuffle(examples.begin(), examples.end(), rng);
  const std::size_t n = examples.size();
  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n))));
  const auto n_val = std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
  DataSplits s;
  s.train.assign(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(examples.begin() + static_cast<std::ptrdiff_t>(n_train),
               examples.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(examples.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), examples.end());
  return s;
}

using Labeler = std::function<std::optional<int>(const NameRecord&)>;

/// Majority gender of each character from per-occurrence marginals (a name
/// with a repeated character counts it twice). nullopt on ties.
using CharGenderTable = std::map<std::string, std::optional<int>>;

inline CharGenderTable char_majority_genders(const std::vector<NameRecord>& records) {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;
  for (const auto& r : records) {
    for (const auto& ch : utf8::split(r.first_name).value_or(std::vector<std::string>{})) {
      counts[ch].first += r.male_count;
      counts[ch].second += r.female_count;
    }
  }
  CharGenderTable out;
  for (const auto& [ch, mf] : counts) {
    out[ch] = mf.first == mf.second ? std::nullopt : std::optional<int>(mf.second > mf.first ? 1 : 0);
  }
  return out;
}

struct DatasetStats {
  std::uint64_t total_records = 0;  // sum of all occurrence counts
  std::size_t unique_names = 0;
  double m_to_f_percent = 0.0;      // +inf when there are no female occurrences
  double same_gender_flip_percent = 0.0;
  double reversal_flip_percent = 0.0;
  std::size_t ties = 0;
  std::size_t two_char_labeled = 0;       // denominator of same_gender_flip
  std::size_t same_gender_flips = 0;
  std::size_t reversal_candidates = 0;    // denominator of reversal_flip
  std::size_t reversal_flips = 0;
};

/// Corpus statistics.
///
/// same_gender_flip: among labeled two-character names, the share whose two
/// characters have the same majority gender and that gender is opposite to
/// the name's label.
///
/// reversal_flip: among labeled two-character names AB (A != B) whose
/// reversal BA is also a labeled name in the corpus, the share where BA has
/// the opposite label. Both members of a flipped pair are counted.
inline DatasetStats compute_stats(const std::vector<NameRecord>& records, const Labeler& labeler,
                                  const CharGenderTable& char_genders) {
  DatasetStats s;
  s.unique_names = records.size();
  std::uint64_t male = 0, female = 0;
  std::unordered_map<std::string, int> labels;
  for (const auto& r : records) {
    male += r.male_count;
    female += r.female_count;
    if (const auto l = labeler(r)) {
      labels.emplace(r.first_name, *l);
    } else {
      ++s.ties;
    }
  }
  s.total_records = male + female;
  s.m_to_f_percent = female == 0 ? std::numeric_limits<double>::infinity()
                                 : 100.0 * static_cast<double>(male) / static_cast<double>(female);

  auto gender_of = [&](const std::string& ch) -> std::optional<int> {
    auto it = char_genders.find(ch);
    return it == char_genders.end() ? std::nullopt : it->second;
  };
  for (const auto& r : records) {
    auto lit = labels.find(r.first_name);
    if (lit == labels.end()) continue;
    const auto chars = utf8::split(r.first_name).value_or(std::vector<std::string>{});
    if (chars.size() != 2) continue;
    ++s.two_char_labeled;
    const auto ga = gender_of(chars[0]), gb = gender_of(chars[1]);
    if (ga && gb && *ga == *gb && *ga != lit->second) ++s.same_gender_flips;
    if (chars[0] == chars[1]) continue;
    auto rit = labels.find(chars[1] + chars[0]);
    if (rit == labels.end()) continue;
    ++s.reversal_candidates;
    if (rit->second != lit->second) ++s.reversal_flips;
  }
  if (s.two_char_labeled) s.same_gender_flip_percent = 100.0 * s.same_gender_flips / static_cast<double>(s.two_char_labeled);
  if (s.reversal_candidates) s.reversal_flip_percent = 100.0 * s.reversal_flips / static_cast<double>(s.reversal_candidates);
  return s;
}

inline DatasetStats compute_stats(const std::vector<NameRecord>& records) {
  return compute_stats(records, majority_label, char_majority_genders(records));
}

}  // namespace chgat
