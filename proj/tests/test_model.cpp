#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "chgat/model.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace chgat;

namespace {

ad::Var logits_for(const std::vector<double>& p_female) {
  std::vector<double> v;
  for (double p : p_female) {
    v.push_back(0.0);
    v.push_back(std::log(p / (1.0 - p)));
  }
  return ad::Var::constant(p_female.size(), 2, v);
}

std::set<std::string> param_names(const ChgatModel& m) {
  const auto names = m.parameters().names();
  return {names.begin(), names.end()};
}

}  // namespace

TEST(Model, LogitsAreFiniteAndDeterministic) {
  const auto a = testing_support::tiny_model();
  const auto b = testing_support::tiny_model();
  for (const std::string name : {"珠", "珠珍", "焚林旺", "龘"}) {
    const auto l = a.forward(name);
    ASSERT_EQ(l.rows(), 1u);
    ASSERT_EQ(l.cols(), 2u);
    for (double v : l.value()) EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(l.value(), b.forward(name).value());
  }
}

TEST(Model, SeedChangesParameters) {
  const auto a = testing_support::tiny_model(VariantKind::full, 7);
  const auto b = testing_support::tiny_model(VariantKind::full, 8);
  EXPECT_NE(a.forward("珠珍").value(), b.forward("珠珍").value());
}

TEST(Model, CharacterOrderMatters) {
  const auto m = testing_support::tiny_model();
  EXPECT_NE(m.forward("珠珍").value(), m.forward("珍珠").value());
}

TEST(Model, PredictionMatchesLogits) {
  const auto m = testing_support::tiny_model();
  const auto l = m.forward("珠");
  const auto p = m.predict("珠");
  EXPECT_NEAR(p.female_probability, 1.0 / (1.0 + std::exp(l.value()[0] - l.value()[1])), 1e-15);
  EXPECT_EQ(p.label, l.value()[1] > l.value()[0] ? 1 : 0);
}

TEST(Model, RejectsEmptyAndLongNames) {
  const auto m = testing_support::tiny_model();
  EXPECT_THROW(m.forward(""), EmptyName);
  EXPECT_THROW(m.forward("珠珍株林"), NameTooLong);
}

TEST(Loss, BinaryCrossEntropyValues) {
  EXPECT_NEAR(loss(logits_for({0.5}), {1}).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(loss(logits_for({1.0 - 1e-12}), {1}).item(), 0.0, 1e-6);
  EXPECT_NEAR(loss(logits_for({0.9, 0.2, 0.7}), {1, 0, 1}).item(), 0.6851790109107685, 1e-12);
  EXPECT_NEAR(loss(logits_for({0.9, 0.2}), {1, 0}, {2.0, 0.5}).item(),
              -2.0 * std::log(0.9) - 0.5 * std::log(0.8), 1e-12);
}

TEST(Loss, ClampKeepsLossFinite) {
  const auto l = ad::Var::constant(1, 2, {0.0, 1000.0});
  EXPECT_NEAR(loss(l, {0}).item(), -std::log(1e-7), 1e-9);
}

TEST(Model, GradientsMatchFiniteDifferences) {
  auto table = testing_support::three_char_table();
  auto vocab = build_vocab(table, {});
  auto model = ChgatModel::create(testing_support::tiny_config(8, 2), VariantKind::full, std::move(table),
                                  std::move(vocab), 3);
  const std::vector<std::string> names{"珠珍", "株", "珍珠株"};
  const std::vector<int> labels{1, 0, 1};
  auto batch_loss = [&] {
    std::vector<ad::Var> rows;
    for (const auto& n : names) rows.push_back(model.forward(n));
    return loss(ad::concat_rows(rows), labels);
  };
  const auto checks = testing_support::gradient_check(model.parameters(), batch_loss);
  EXPECT_EQ(checks.size(), model.parameters().group_count());
  for (const auto& [name, c] : checks) EXPECT_LE(c.relative_error, 1e-3) << name;
}

TEST(Variants, ParameterGroupsDifferAsDesigned) {
  const auto full = param_names(testing_support::tiny_model(VariantKind::full));
  const auto v1 = param_names(testing_support::tiny_model(VariantKind::variant_1));
  const auto v2 = param_names(testing_support::tiny_model(VariantKind::variant_2));
  auto has_prefix = [](const std::set<std::string>& s, const std::string& p) {
    return std::any_of(s.begin(), s.end(), [&](const std::string& n) { return n.rfind(p, 0) == 0; });
  };
  EXPECT_TRUE(has_prefix(full, "graph.structure_attn"));
  EXPECT_TRUE(has_prefix(full, "graph.aggregate_attn"));
  EXPECT_TRUE(has_prefix(full, "graph.node.pr"));
  EXPECT_TRUE(full.count("graph.embed.pron"));

  EXPECT_FALSE(has_prefix(v1, "graph.aggregate_attn"));
  EXPECT_FALSE(has_prefix(v1, "graph.node.pr"));
  EXPECT_FALSE(v1.count("graph.embed.pron"));
  EXPECT_TRUE(has_prefix(v1, "graph.structure_attn"));

  EXPECT_FALSE(has_prefix(v2, "graph.structure_attn"));
  EXPECT_TRUE(has_prefix(v2, "graph.aggregate_attn"));
  EXPECT_TRUE(has_prefix(v2, "graph.node.pr"));

  const auto count = [](VariantKind k) { return testing_support::tiny_model(k).parameters().scalar_count(); };
  EXPECT_LT(count(VariantKind::variant_1), count(VariantKind::variant_2));
  EXPECT_LT(count(VariantKind::variant_2), count(VariantKind::full));
}

TEST(Variants, BuildByName) {
  auto table = testing_support::small_table();
  auto vocab = build_vocab(table, {});
  EXPECT_EQ(build_variant(testing_support::tiny_config(), "variant_2", table, vocab, 1).variant(),
            VariantKind::variant_2);
  EXPECT_THROW(build_variant(testing_support::tiny_config(), "variant_3", table, vocab, 1), UnknownVariant);
}

TEST(ModelConfig, Validation) {
  ModelConfig c;
  c.dim = 10;
  c.heads = 3;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.heads = 2;
  EXPECT_NO_THROW(c.validate());
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}
