#include "moodbench/metrics.hpp"

#include <gtest/gtest.h>

#include "moodbench/rng.hpp"

using namespace moodbench;

TEST(Mse, HandCases) {
  EXPECT_DOUBLE_EQ(mse({1.0, 2.0}, {1.0, 2.0}), 0.0);
  EXPECT_DOUBLE_EQ(mse({0.0, 0.0}, {1.0, 3.0}), 5.0);
  EXPECT_NEAR(rmse({0.0, 0.0}, {1.0, 3.0}), std::sqrt(5.0), 1e-12);
  EXPECT_THROW(mse({1.0}, {1.0, 2.0}), PreconditionError);
}

TEST(Mse, PermutationAndTranslationInvariance) {
  std::vector<double> p = {1.0, 4.0, -2.0, 0.5};
  std::vector<double> t = {0.0, 3.0, -1.0, 2.5};
  double base = mse(p, t);
  std::vector<double> p2 = {4.0, 1.0, 0.5, -2.0};
  std::vector<double> t2 = {3.0, 0.0, 2.5, -1.0};
  EXPECT_DOUBLE_EQ(mse(p2, t2), base);
  for (auto& v : p) v += 7.25;
  for (auto& v : t) v += 7.25;
  EXPECT_NEAR(mse(p, t), base, 1e-12);
}

TEST(R2Grouped, PerfectPredictions) {
  std::vector<double> y = {1.0, 3.0, 11.0, 13.0};
  std::vector<std::string> u = {"a", "a", "b", "b"};
  EXPECT_DOUBLE_EQ(*r2_grouped(y, y, u, Grouping::kGlobal), 1.0);
  EXPECT_DOUBLE_EQ(*r2_grouped(y, y, u, Grouping::kPerUser), 1.0);
}

TEST(R2Grouped, TwoUserHandCase) {
  // Users a: y=[1,3] pred=[2,2]; b: y=[11,13] pred=[12,12]. Predicting each
  // user's mean looks excellent globally and exactly zero per user.
  std::vector<double> preds = {2.0, 2.0, 12.0, 12.0};
  std::vector<double> truths = {1.0, 3.0, 11.0, 13.0};
  std::vector<std::string> users = {"a", "a", "b", "b"};
  EXPECT_NEAR(*r2_grouped(preds, truths, users, Grouping::kGlobal),
              1.0 - 4.0 / 104.0, 1e-9);
  EXPECT_NEAR(*r2_grouped(preds, truths, users, Grouping::kPerUser), 0.0, 1e-12);
}

TEST(R2Grouped, UndefinedOnConstantTruths) {
  std::vector<double> truths = {5.0, 5.0, 5.0, 5.0};
  std::vector<double> preds = {4.0, 5.0, 6.0, 5.0};
  std::vector<std::string> users = {"a", "a", "b", "b"};
  EXPECT_FALSE(r2_grouped(preds, truths, users, Grouping::kGlobal).has_value());
}

TEST(R2Grouped, PerUserRequiresTwoInstances) {
  std::vector<double> y = {1.0, 2.0, 3.0};
  std::vector<std::string> u = {"a", "a", "b"};
  EXPECT_THROW(r2_grouped(y, y, u, Grouping::kPerUser), PreconditionError);
}

TEST(R2Grouped, GlobalDominatesPerUserForMeanPredictor) {
  Rng rng(99);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> truths, preds;
    std::vector<std::string> users;
    for (int u = 0; u < 4; ++u) {
      double base = rng.normal(0.0, 10.0);
      std::vector<double> vals;
      for (int i = 0; i < 6; ++i) vals.push_back(base + rng.normal(0.0, 1.0));
      double mean = 0.0;
      for (double v : vals) mean += v / vals.size();
      for (double v : vals) {
        truths.push_back(v);
        preds.push_back(mean);
        users.push_back("u" + std::to_string(u));
      }
    }
    auto global = r2_grouped(preds, truths, users, Grouping::kGlobal);
    auto per_user = r2_grouped(preds, truths, users, Grouping::kPerUser);
    ASSERT_TRUE(global && per_user);
    EXPECT_GE(*global, *per_user - 1e-12);
  }
}

TEST(LikamwaAccuracy, CanonicalThreshold) {
  // Unit-spaced 5-class scale: range length 5 gives e = 0.25.
  TargetRange r{0.0, 5.0};
  EXPECT_DOUBLE_EQ(likamwa_accuracy({3.4}, {3.0}, r), 1.0);   // 0.16 < 0.25
  EXPECT_DOUBLE_EQ(likamwa_accuracy({3.6}, {3.0}, r), 0.0);   // 0.36 >= 0.25
  EXPECT_DOUBLE_EQ(likamwa_accuracy({3.5}, {3.0}, r), 0.0);   // boundary is strict
}

TEST(LikamwaAccuracy, ScalesWithRange) {
  TargetRange r{10.0, 50.0};  // w = 8, e = 16
  EXPECT_DOUBLE_EQ(likamwa_accuracy({24.0}, {21.0}, r), 1.0);  // 9 < 16
  EXPECT_DOUBLE_EQ(likamwa_accuracy({25.0}, {21.0}, r), 0.0);  // 16 not < 16
}

TEST(LikamwaAccuracy, AffineInvariance) {
  Rng rng(7);
  std::vector<double> preds, truths;
  for (int i = 0; i < 50; ++i) {
    truths.push_back(rng.uniform() * 5.0);
    preds.push_back(truths.back() + rng.normal(0.0, 0.6));
  }
  TargetRange r{0.0, 5.0};
  double base = likamwa_accuracy(preds, truths, r);
  double a = 3.7, b = -11.0;
  std::vector<double> p2, t2;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    p2.push_back(a * preds[i] + b);
    t2.push_back(a * truths[i] + b);
  }
  TargetRange r2{a * r.lo + b, a * r.hi + b};
  EXPECT_DOUBLE_EQ(likamwa_accuracy(p2, t2, r2), base);
}

TEST(SensitivitySpecificity, HandCases) {
  auto ss = sensitivity_specificity({1, 0, 1, 0}, {1, 0, 0, 0});
  ASSERT_TRUE(ss.sensitivity && ss.specificity);
  EXPECT_DOUBLE_EQ(*ss.sensitivity, 1.0);
  EXPECT_NEAR(*ss.specificity, 2.0 / 3.0, 1e-12);

  auto perfect = sensitivity_specificity({1, 0, 1}, {1, 0, 1});
  EXPECT_DOUBLE_EQ(*perfect.sensitivity, 1.0);
  EXPECT_DOUBLE_EQ(*perfect.specificity, 1.0);

  auto no_pos = sensitivity_specificity({0, 1, 0}, {0, 0, 0});
  EXPECT_FALSE(no_pos.sensitivity.has_value());
  ASSERT_TRUE(no_pos.specificity.has_value());
  EXPECT_NEAR(*no_pos.specificity, 2.0 / 3.0, 1e-12);
}

TEST(Accuracy, HandCases) {
  EXPECT_DOUBLE_EQ(accuracy({1, 1, 0}, {1, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy({1, 0}, {1, 1}), 0.5);
  EXPECT_DOUBLE_EQ(accuracy({0, 0}, {1, 1}), 0.0);
}
