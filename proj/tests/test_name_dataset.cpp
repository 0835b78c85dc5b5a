#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "chgat/name_dataset.hpp"
#include "support.hpp"

using namespace chgat;

TEST(NameRecords, ParsesCounts) {
  const auto recs = parse_name_records("name,male,female\n胜男,120,4800\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0], (NameRecord{"胜男", 120, 4800}));
}

TEST(NameRecords, ToleratesBomAndCrlf) {
  const auto recs = parse_name_records("\xEF\xBB\xBFname,male,female\r\n美,1,2\r\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].first_name, "美");
}

TEST(NameRecords, RejectsInvalidRows) {
  EXPECT_THROW(parse_name_records("name,male,female\n美丽,0,0\n"), InvariantViolation);
  EXPECT_THROW(parse_name_records("name,male,female\n美丽欧阳,1,2\n"), InvariantViolation);
  EXPECT_THROW(parse_name_records("name,male,female\n,1,2\n"), InvariantViolation);
  EXPECT_THROW(parse_name_records("name,male,female\n美,-1,2\n"), ParseError);
  EXPECT_THROW(parse_name_records("name,male,female\n美,1\n"), ParseError);
  EXPECT_THROW(parse_name_records("name,male,female\n美,1,2\n美,3,4\n"), ParseError);
  EXPECT_THROW(parse_name_records("first,male,female\n美,1,2\n"), ParseError);
  EXPECT_THROW(load_name_records(testing_support::data_path("missing.csv")), FileMissing);
}

TEST(NameRecords, InvariantViolationCarriesLine) {
  try {
    parse_name_records("name,male,female\n美,1,2\n丽,0,0\n");
    FAIL() << "expected InvariantViolation";
  } catch (const InvariantViolation& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Labels, MajorityAndWeight) {
  const auto r = derive_labels({{"美", 10, 90}, {"强", 70, 30}, {"丽", 5, 5}});
  ASSERT_EQ(r.examples.size(), 2u);
  EXPECT_EQ(r.examples[0], (LabeledExample{"美", 1, 100}));
  EXPECT_EQ(r.examples[1], (LabeledExample{"强", 0, 100}));
  EXPECT_EQ(r.ties, 1u);
}

TEST(Labels, MatchesIndependentRule) {
  std::mt19937_64 rng(4);
  std::vector<NameRecord> recs;
  for (int i = 0; i < 200; ++i) {
    recs.push_back({testing_support::code_point(0x5000 + i), rng() % 20, rng() % 20 + (i % 7 == 0 ? 0 : 1)});
  }
  const auto r = derive_labels(recs);
  std::size_t k = 0, ties = 0;
  for (const auto& rec : recs) {
    if (rec.male_count == rec.female_count) {
      ++ties;
      continue;
    }
    ASSERT_LT(k, r.examples.size());
    EXPECT_EQ(r.examples[k].label, rec.female_count > rec.male_count ? 1 : 0);
    EXPECT_EQ(r.examples[k].weight, rec.male_count + rec.female_count);
    ++k;
  }
  EXPECT_EQ(k, r.examples.size());
  EXPECT_EQ(ties, r.ties);
}

TEST(Split, DefaultRatiosOnHundredExamples) {
  std::vector<LabeledExample> ex;
  for (int i = 0; i < 100; ++i) ex.push_back({testing_support::code_point(0x5000 + i), i % 2, 1});
  const auto s = split(ex, {0.90, 0.05, 0.05}, 42);
  EXPECT_EQ(s.train.size(), 90u);
  EXPECT_EQ(s.val.size(), 5u);
  EXPECT_EQ(s.test.size(), 5u);
  std::set<std::string> seen;
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (const auto& e : *part) EXPECT_TRUE(seen.insert(e.first_name).second);
  EXPECT_EQ(seen.size(), 100u);

  const auto again = split(ex, {0.90, 0.05, 0.05}, 42);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
  auto shuffled = ex;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
  EXPECT_EQ(split(shuffled, {0.90, 0.05, 0.05}, 42).val, s.val);
  EXPECT_NE(split(ex, {0.90, 0.05, 0.05}, 43).train, s.train);
}

TEST(Split, RejectsBadRatios) {
  EXPECT_THROW(split({}, {0.5, 0.2, 0.2}, 1), InvalidArgument);
  EXPECT_THROW(split({}, {1.2, -0.1, -0.1}, 1), InvalidArgument);
}

TEST(Stats, TenNameFixture) {
  const auto recs = load_name_records(testing_support::data_path("names_10.csv"));
  const auto s = compute_stats(recs);
  EXPECT_EQ(s.total_records, 740u);
  EXPECT_EQ(s.unique_names, 10u);
  EXPECT_EQ(s.ties, 1u);
  EXPECT_NEAR(s.m_to_f_percent, 39700.0 / 343.0, 1e-12);
  EXPECT_EQ(s.two_char_labeled, 5u);
  EXPECT_EQ(s.same_gender_flips, 1u);
  EXPECT_NEAR(s.same_gender_flip_percent, 20.0, 1e-12);
  EXPECT_EQ(s.reversal_candidates, 4u);
  EXPECT_EQ(s.reversal_flips, 2u);
  EXPECT_NEAR(s.reversal_flip_percent, 50.0, 1e-12);
}

TEST(Stats, AllMaleRatioIsInfinite) {
  const auto s = compute_stats({{"强", 3, 0}, {"伟", 2, 0}});
  EXPECT_TRUE(std::isinf(s.m_to_f_percent));
  EXPECT_EQ(s.two_char_labeled, 0u);
  EXPECT_EQ(s.same_gender_flip_percent, 0.0);
}

TEST(Stats, InvariantUnderRowPermutation) {
  auto recs = load_name_records(testing_support::data_path("names_30.csv"));
  const auto base = compute_stats(recs);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(recs.begin(), recs.end(), rng);
    const auto s = compute_stats(recs);
    EXPECT_EQ(s.total_records, base.total_records);
    EXPECT_EQ(s.m_to_f_percent, base.m_to_f_percent);
    EXPECT_EQ(s.same_gender_flip_percent, base.same_gender_flip_percent);
    EXPECT_EQ(s.reversal_flip_percent, base.reversal_flip_percent);
  }
}

TEST(Stats, CharacterMajorityCountsRepeats) {
  const auto g = char_majority_genders({{"丽丽", 0, 3}, {"丽强", 5, 0}});
  EXPECT_EQ(g.at("丽"), 1);
  EXPECT_EQ(g.at("强"), 0);
  EXPECT_FALSE(char_majority_genders({{"美", 2, 2}}).at("美").has_value());
}

TEST(Examples, CsvWriterRoundTrips) {
  std::ostringstream out;
  write_examples_csv(out, {{"美", 1, 7}, {"强", 0, 3}});
  const auto back = derive_labels(parse_name_records(out.str()));
  ASSERT_EQ(back.examples.size(), 2u);
  EXPECT_EQ(back.examples[0].label, 1);
  EXPECT_EQ(back.examples[0].weight, 7u);
  EXPECT_EQ(back.examples[1].label, 0);
}
