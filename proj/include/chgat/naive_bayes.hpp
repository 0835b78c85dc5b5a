#pragma once

// Character-level Naive Bayes gender guesser: a name's class likelihood is
// the product of its characters' smoothed per-class probabilities.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chgat/config.hpp"
#include "chgat/error.hpp"
#include "chgat/model.hpp"
#include "chgat/name_dataset.hpp"

namespace chgat {

struct CharCounts {
  double male = 0.0;
  double female = 0.0;
};

struct NBModel {
  std::map<std::string, CharCounts> char_gender_counts;
  std::pair<double, double> class_priors{0.5, 0.5};  // (male, female)
  double smoothing_alpha = 1.0;

  double total(int label) const {
    double t = 0.0;
    for (const auto& [_, c] : char_gender_counts) t += label == 1 ? c.female : c.male;
    return t;
  }

  /// Smoothed P(ch | label). Only defined for characters in the model.
  double conditional(const std::string& ch, int label) const {
    const auto& c = char_gender_counts.at(ch);
    const double v = static_cast<double>(char_gender_counts.size());
    return ((label == 1 ? c.female : c.male) + smoothing_alpha) / (total(label) + smoothing_alpha * v);
  }
};

inline NBModel nb_train(const std::vector<LabeledExample>& examples, double alpha = 1.0, bool use_weights = true) {
  if (examples.empty()) throw EmptyTrainingSet();
  if (!(alpha > 0.0)) throw InvalidArgument("smoothing alpha must be positive");
  NBModel m;
  m.smoothing_alpha = alpha;
  double male = 0.0, female = 0.0;
  for (const auto& e : examples) {
    const double w = use_weights ? static_cast<double>(e.weight) : 1.0;
    (e.label == 1 ? female : male) += w;
    for (const auto& ch : split_name(e.first_name)) {
      auto& c = m.char_gender_counts[ch];
      (e.label == 1 ? c.female : c.male) += w;
    }
  }
  m.class_priors = {male / (male + female), female / (male + female)};
  return m;
}

/// Argmax label and its normalized posterior. Characters unseen in training
/// contribute the same factor to both classes, so they cancel. Exact ties
/// go to label 0.
inline Prediction nb_predict(const NBModel& model, const std::string& name) {
  const auto chars = split_name(name);
  if (chars.empty()) throw EmptyName();
  double log_male = std::log(model.class_priors.first);
  double log_female = std::log(model.class_priors.second);
  const double total_m = model.total(0), total_f = model.total(1);
  const double denom_m = total_m + model.smoothing_alpha * static_cast<double>(model.char_gender_counts.size());
  const double denom_f = total_f + model.smoothing_alpha * static_cast<double>(model.char_gender_counts.size());
  for (const auto& ch : chars) {
    auto it = model.char_gender_counts.find(ch);
    if (it == model.char_gender_counts.end()) continue;
    log_male += std::log((it->second.male + model.smoothing_alpha) / denom_m);
    log_female += std::log((it->second.female + model.smoothing_alpha) / denom_f);
  }
  const double mx = std::max(log_male, log_female);
  const double pm = std::exp(log_male - mx), pf = std::exp(log_female - mx);
  Prediction p;
  p.female_probability = pf / (pm + pf);
  p.label = log_female > log_male ? 1 : 0;
  p.probability = p.label == 1 ? p.female_probability : 1.0 - p.female_probability;
  return p;
}

/// `#priors,<male>,<female>,alpha,<alpha>` then `char,male_count,female_count`.
inline void write_nb_model(std::ostream& out, const NBModel& m) {
  out << "#priors," << format_double(m.class_priors.first) << ',' << format_double(m.class_priors.second) << ",alpha,"
      << format_double(m.smoothing_alpha) << '\n';
  out << "char,male_count,female_count\n";
  for (const auto& [ch, c] : m.char_gender_counts) {
    out << ch << ',' << format_double(c.male) << ',' << format_double(c.female) << '\n';
  }
}

inline bool looks_like_nb_model(std::string_view data) { return data.rfind("#priors,", 0) == 0; }

inline NBModel read_nb_model(std::istream& in) {
  NBModel m;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty NB model");
  auto head = detail::split_on(line, ',');
  if (head.size() != 5 || head[0] != "#priors" || head[3] != "alpha") throw ParseError(1, "bad priors header");
  try {
    m.class_priors = {std::stod(head[1]), std::stod(head[2])};
    m.smoothing_alpha = std::stod(head[4]);
  } catch (const std::exception&) {
    throw ParseError(1, "bad number in priors header");
  }
  if (!std::getline(in, line) || line != "char,male_count,female_count") throw ParseError(2, "missing column header");
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = detail::split_on(line, ',');
    if (f.size() != 3) throw ParseError(line_no, "expected char,male_count,female_count");
    try {
      m.char_gender_counts[f[0]] = {std::stod(f[1]), std::stod(f[2])};
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad count");
    }
  }
  return m;
}

inline void save_nb_model(const std::string& path, const NBModel& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  write_nb_model(out, m);
}

inline NBModel load_nb_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing(path);
  return read_nb_model(in);
}

}  // namespace chgat
