#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "chgat/naive_bayes.hpp"
#include "support.hpp"

using namespace chgat;

namespace {

std::vector<LabeledExample> five_examples() {
  return {{"美", 1, 3}, {"美丽", 1, 2}, {"强", 0, 4}, {"强丽", 0, 1}, {"丽", 1, 2}};
}

// Direct product of smoothed frequencies, counted from scratch.
double brute_force_female(const std::vector<LabeledExample>& ex, const std::string& name, double alpha) {
  std::map<std::string, double> count[2];
  double prior[2] = {0, 0}, total[2] = {0, 0};
  for (const auto& e : ex) {
    prior[e.label] += static_cast<double>(e.weight);
    for (const auto& ch : split_name(e.first_name)) {
      count[e.label][ch] += static_cast<double>(e.weight);
      count[1 - e.label][ch] += 0.0;
      total[e.label] += static_cast<double>(e.weight);
    }
  }
  const double v = static_cast<double>(count[0].size());
  double score[2];
  for (int y = 0; y < 2; ++y) {
    score[y] = prior[y] / (prior[0] + prior[1]);
    for (const auto& ch : split_name(name)) {
      if (!count[y].count(ch)) continue;
      score[y] *= (count[y][ch] + alpha) / (total[y] + alpha * v);
    }
  }
  return score[1] / (score[0] + score[1]);
}

}  // namespace

TEST(NaiveBayes, HandComputedConditionals) {
  const auto m = nb_train(five_examples());
  EXPECT_NEAR(m.class_priors.first, 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(m.class_priors.second, 7.0 / 12.0, 1e-15);
  EXPECT_NEAR(m.conditional("美", 1), 1.0 / 2.0, 1e-15);
  EXPECT_NEAR(m.conditional("丽", 1), 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(m.conditional("强", 1), 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(m.conditional("美", 0), 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(m.conditional("丽", 0), 2.0 / 9.0, 1e-15);
  EXPECT_NEAR(m.conditional("强", 0), 2.0 / 3.0, 1e-15);
}

TEST(NaiveBayes, HandComputedPosterior) {
  const auto m = nb_train(five_examples());
  // 强丽: male 5/12 * 2/3 * 2/9, female 7/12 * 1/12 * 5/12.
  const double male = 5.0 / 12 * 2.0 / 3 * 2.0 / 9, female = 7.0 / 12 * 1.0 / 12 * 5.0 / 12;
  const auto p = nb_predict(m, "强丽");
  EXPECT_EQ(p.label, 0);
  EXPECT_NEAR(p.female_probability, female / (male + female), 1e-12);
  EXPECT_NEAR(p.probability, male / (male + female), 1e-12);
}

TEST(NaiveBayes, MatchesBruteForce) {
  const auto ex = five_examples();
  const auto m = nb_train(ex);
  for (const std::string name : {"美", "丽", "强", "美丽", "丽美", "强强", "美强丽", "龘", "美龘"}) {
    EXPECT_NEAR(nb_predict(m, name).female_probability, brute_force_female(ex, name, 1.0), 1e-12) << name;
  }
}

TEST(NaiveBayes, UnseenCharactersFallBackToPrior) {
  const auto m = nb_train(five_examples());
  const auto p = nb_predict(m, "龘");
  EXPECT_EQ(p.label, 1);
  EXPECT_NEAR(p.female_probability, 7.0 / 12.0, 1e-12);
  EXPECT_EQ(nb_predict(m, "龘美").female_probability, nb_predict(m, "美").female_probability);
}

TEST(NaiveBayes, TiesGoToMale) {
  const auto m = nb_train({{"美", 1, 1}, {"强", 0, 1}});
  EXPECT_EQ(nb_predict(m, "龘").label, 0);
}

TEST(NaiveBayes, WeightScaleInvariance) {
  auto scaled = five_examples();
  for (auto& e : scaled) e.weight *= 10;
  const auto a = nb_train(five_examples()), b = nb_train(scaled);
  EXPECT_NEAR(a.class_priors.second, b.class_priors.second, 1e-15);
  for (const std::string name : {"美", "强丽", "美丽"}) EXPECT_EQ(nb_predict(a, name).label, nb_predict(b, name).label);
}

TEST(NaiveBayes, UnweightedCounts) {
  const auto m = nb_train(five_examples(), 1.0, false);
  EXPECT_NEAR(m.class_priors.second, 3.0 / 5.0, 1e-15);
  EXPECT_EQ(m.char_gender_counts.at("美").female, 2.0);
}

TEST(NaiveBayes, Errors) {
  EXPECT_THROW(nb_train({}), EmptyTrainingSet);
  EXPECT_THROW(nb_train(five_examples(), 0.0), InvalidArgument);
  EXPECT_THROW(nb_predict(nb_train(five_examples()), ""), EmptyName);
}

TEST(NaiveBayes, FileRoundTrip) {
  const auto m = nb_train(five_examples(), 0.5);
  testing_support::TempDir dir("nb");
  save_nb_model(dir.str("model.nb.csv"), m);
  const auto back = load_nb_model(dir.str("model.nb.csv"));
  EXPECT_EQ(back.smoothing_alpha, 0.5);
  for (const std::string name : {"美", "强丽", "龘"}) {
    EXPECT_EQ(nb_predict(back, name).female_probability, nb_predict(m, name).female_probability);
  }
  std::stringstream bad("#priors,x\n");
  EXPECT_THROW(read_nb_model(bad), ParseError);
}
