#include "moodbench/transform.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "moodbench/instances.hpp"
#include "moodbench/rng.hpp"
#include "moodbench/synthetic.hpp"

using namespace moodbench;

namespace {

LabeledSeries series(std::initializer_list<std::pair<int, double>> pts,
                     const std::string& uid = "u1") {
  LabeledSeries s;
  s.user_id = uid;
  s.points.assign(pts.begin(), pts.end());
  return s;
}

InstanceSet instances_of(std::initializer_list<std::tuple<std::string, int, double, double>> rows) {
  // (user, day, feature0, target)
  InstanceSet xs;
  xs.feature_dim = 1;
  xs.target_name = "mood";
  xs.target_range = {0.0, 100.0};
  for (const auto& [uid, day, f, t] : rows) {
    Instance inst;
    inst.user_id = uid;
    inst.form_day = day;
    inst.window_start = day;
    inst.window_end = day;
    inst.features = {f};
    inst.target = t;
    xs.instances.push_back(inst);
  }
  return xs;
}

}  // namespace

TEST(MovingAverage, IdentityOnConstants) {
  auto out = moving_average_filter(series({{1, 5.0}, {2, 5.0}, {3, 5.0}, {4, 5.0}}), 14);
  for (const auto& [day, v] : out.points) EXPECT_DOUBLE_EQ(v, 5.0);
  auto twice = moving_average_filter(out, 14);
  for (std::size_t i = 0; i < out.points.size(); ++i)
    EXPECT_DOUBLE_EQ(twice.points[i].second, out.points[i].second);
}

TEST(MovingAverage, TrailingWindowHandCase) {
  auto out = moving_average_filter(series({{1, 1.0}, {2, 2.0}, {3, 3.0}, {4, 4.0}}), 2);
  ASSERT_EQ(out.points.size(), 4u);
  EXPECT_DOUBLE_EQ(out.points[0].second, 1.0);
  EXPECT_DOUBLE_EQ(out.points[1].second, 1.5);
  EXPECT_DOUBLE_EQ(out.points[2].second, 2.5);
  EXPECT_DOUBLE_EQ(out.points[3].second, 3.5);
}

TEST(MovingAverage, SparseDaysSkipMissing) {
  auto out = moving_average_filter(series({{1, 2.0}, {10, 8.0}}), 14);
  EXPECT_DOUBLE_EQ(out.points[0].second, 2.0);
  EXPECT_DOUBLE_EQ(out.points[1].second, 5.0);
}

TEST(MovingAverage, PreservesDayOrder) {
  auto out = moving_average_filter(series({{0, 1.0}, {3, 2.0}, {9, 0.5}}), 3);
  ASSERT_EQ(out.points.size(), 3u);
  EXPECT_EQ(out.points[0].first, 0);
  EXPECT_EQ(out.points[1].first, 3);
  EXPECT_EQ(out.points[2].first, 9);
}

TEST(WeekdayDetrend, RemovesExactCyclicTrend) {
  // Days 0 and 7 share a weekday, 1 and 8 share another.
  auto out = weekday_detrend(series({{0, 5.0}, {1, 3.0}, {7, 5.0}, {8, 3.0}}));
  for (const auto& [day, v] : out.points) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(WeekdayDetrend, SingleObservationPerWeekdayIsZero) {
  auto out = weekday_detrend(series({{0, 4.0}, {1, 9.0}, {2, -3.0}}));
  for (const auto& [day, v] : out.points) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(WeekdayDetrend, TwoValueWeekday) {
  auto out = weekday_detrend(series({{0, 4.0}, {7, 6.0}}));
  EXPECT_DOUBLE_EQ(out.points[0].second, -1.0);
  EXPECT_DOUBLE_EQ(out.points[1].second, 1.0);
}

TEST(WeekdayDetrend, PerWeekdayMeanExactlyZero) {
  Rng rng(44);
  LabeledSeries s;
  s.user_id = "u";
  for (int day = 0; day < 90; ++day)
    s.points.emplace_back(day, rng.normal(10.0, 4.0));
  auto out = weekday_detrend(s);
  double sums[7] = {0};
  int counts[7] = {0};
  for (const auto& [day, v] : out.points) {
    sums[day % 7] += v;
    counts[day % 7] += 1;
  }
  for (int w = 0; w < 7; ++w) EXPECT_NEAR(sums[w] / counts[w], 0.0, 1e-12);
}

TEST(BinarizeOneStd, HandCases) {
  auto labels = binarize_one_std(
      series({{0, 0.0}, {1, 0.0}, {2, 0.0}, {3, 0.0}, {4, 10.0}}));
  // mean 2, population std 4, threshold 6
  std::vector<int> expected = {0, 0, 0, 0, 1};
  for (std::size_t i = 0; i < labels.size(); ++i)
    EXPECT_EQ(labels[i].second, expected[i]);
}

TEST(BinarizeOneStd, ConstantSeriesAllZero) {
  auto labels = binarize_one_std(series({{0, 3.0}, {1, 3.0}, {2, 3.0}}));
  for (const auto& [day, l] : labels) EXPECT_EQ(l, 0);
}

TEST(BinarizeOneStd, BoundaryNotExceeded) {
  auto labels = binarize_one_std(series({{0, -1.0}, {1, 1.0}}));
  EXPECT_EQ(labels[0].second, 0);
  EXPECT_EQ(labels[1].second, 0);
}

TEST(BinarizeOneStd, AtMostHalfPositive) {
  Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    LabeledSeries s;
    s.user_id = "u";
    int n = 2 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) s.points.emplace_back(i, rng.normal(0, 2));
    auto labels = binarize_one_std(s);
    int ones = 0;
    for (const auto& [day, l] : labels) ones += l;
    EXPECT_LE(ones, (n + 1) / 2);
  }
}

TEST(PerUserZscore, HandCase) {
  InstanceSet xs = instances_of({{"a", 0, 1.0, 1.0},
                                 {"a", 1, 2.0, 2.0},
                                 {"a", 2, 3.0, 3.0}});
  InstanceSet out = per_user_zscore(xs);
  EXPECT_NEAR(out.instances[0].features[0], -1.2247, 1e-4);
  EXPECT_NEAR(out.instances[1].features[0], 0.0, 1e-9);
  EXPECT_NEAR(out.instances[2].features[0], 1.2247, 1e-4);
}

TEST(PerUserZscore, ConstantDimMapsToZero) {
  InstanceSet xs = instances_of({{"a", 0, 7.0, 1.0}, {"a", 1, 7.0, 2.0}});
  InstanceSet out = per_user_zscore(xs);
  EXPECT_DOUBLE_EQ(out.instances[0].features[0], 0.0);
  EXPECT_DOUBLE_EQ(out.instances[1].features[0], 0.0);
}

TEST(PerUserZscore, PerUserStatisticsDiffer) {
  InstanceSet xs = instances_of({{"a", 0, 1.0, 1.0},
                                 {"a", 1, 2.0, 2.0},
                                 {"b", 0, 101.0, 1.0},
                                 {"b", 1, 104.0, 2.0}});
  InstanceSet out = per_user_zscore(xs);
  // Same z-pattern for both users even though raw values differ by 100.
  EXPECT_NEAR(out.instances[0].features[0], -1.0, 1e-12);
  EXPECT_NEAR(out.instances[2].features[0], -1.0, 1e-12);
  // And identical raw dims with different means give different outputs.
  InstanceSet xs2 = instances_of({{"a", 0, 1.0, 1.0},
                                  {"a", 1, 3.0, 2.0},
                                  {"b", 0, 1.0, 1.0},
                                  {"b", 1, 5.0, 2.0}});
  InstanceSet out2 = per_user_zscore(xs2);
  EXPECT_NE(out2.instances[0].features[0] == out2.instances[2].features[0] &&
                out2.instances[1].features[0] == out2.instances[3].features[0],
            true);
}

TEST(PerUserZscore, SingleInstanceUserNamedInError) {
  InstanceSet xs = instances_of({{"a", 0, 1.0, 1.0},
                                 {"a", 1, 2.0, 2.0},
                                 {"lonely", 0, 3.0, 1.0}});
  try {
    per_user_zscore(xs);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(PerUserZscore, OutputMomentsProperty) {
  GenConfig cfg;
  cfg.n_users = 5;
  cfg.days_per_user = 25;
  cfg.d_noise = 3;
  cfg.d_id = 2;
  cfg.seed = 61;
  InstanceSet xs = build_instances(generate_synthetic(cfg), "mood", 1);
  InstanceSet out = per_user_zscore(xs);
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < out.instances.size(); ++i)
    by_user[out.instances[i].user_id].push_back(i);
  for (const auto& [uid, idxs] : by_user) {
    for (int j = 0; j < out.feature_dim; ++j) {
      double mean = 0.0;
      for (auto i : idxs) mean += out.instances[i].features[j];
      mean /= idxs.size();
      double var = 0.0;
      for (auto i : idxs) {
        double d = out.instances[i].features[j] - mean;
        var += d * d;
      }
      double sd = std::sqrt(var / idxs.size());
      EXPECT_NEAR(mean, 0.0, 1e-9);
      EXPECT_TRUE(std::abs(sd - 1.0) < 1e-9 || std::abs(sd) < 1e-9);
    }
  }
}

TEST(TrainFittedZscore, SelfApplicationStandardizes) {
  InstanceSet xs = instances_of({{"a", 0, 1.0, 1.0},
                                 {"a", 1, 2.0, 2.0},
                                 {"b", 0, 3.0, 1.0},
                                 {"b", 1, 6.0, 2.0}});
  InstanceSet out = train_fitted_zscore(xs, xs);
  double mean = 0.0;
  for (const auto& inst : out.instances) mean += inst.features[0];
  mean /= out.instances.size();
  double var = 0.0;
  for (const auto& inst : out.instances) {
    double d = inst.features[0] - mean;
    var += d * d;
  }
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(var / out.instances.size()), 1.0, 1e-12);
}

TEST(TrainFittedZscore, TestPointAtTrainMeanIsZero) {
  InstanceSet train = instances_of({{"a", 0, 1.0, 1.0}, {"a", 1, 3.0, 2.0}});
  InstanceSet test = instances_of({{"z", 9, 2.0, 5.0}});
  InstanceSet out = train_fitted_zscore(train, test);
  EXPECT_DOUBLE_EQ(out.instances[0].features[0], 0.0);
}

TEST(TrainFittedZscore, NoRefitOnDisjointTest) {
  InstanceSet train = instances_of({{"a", 0, 0.0, 1.0}, {"a", 1, 2.0, 2.0}});
  InstanceSet test = instances_of({{"z", 9, 1000.0, 5.0}});
  InstanceSet out = train_fitted_zscore(train, test);
  EXPECT_TRUE(std::isfinite(out.instances[0].features[0]));
  EXPECT_NEAR(out.instances[0].features[0], 999.0, 1e-9);
}

TEST(BinTopBottom, UniqHandCase) {
  InstanceSet xs;
  xs.feature_dim = 1;
  for (int i = 1; i <= 10; ++i) {
    Instance inst;
    inst.user_id = "u";
    inst.form_day = i;
    inst.features = {0.0};
    inst.target = static_cast<double>(i);
    xs.instances.push_back(inst);
  }
  BinnedSet b = bin_top_bottom(xs, 0.3, BinMode::kUniq);
  ASSERT_EQ(b.indices.size(), 6u);
  std::map<double, int> labels;
  for (std::size_t i = 0; i < b.indices.size(); ++i)
    labels[xs.instances[b.indices[i]].target] = b.labels[i];
  EXPECT_EQ(labels.at(1.0), 0);
  EXPECT_EQ(labels.at(2.0), 0);
  EXPECT_EQ(labels.at(3.0), 0);
  EXPECT_EQ(labels.at(8.0), 1);
  EXPECT_EQ(labels.at(9.0), 1);
  EXPECT_EQ(labels.at(10.0), 1);
}

TEST(BinTopBottom, TieRuleExcludesSharedScore) {
  InstanceSet xs;
  xs.feature_dim = 1;
  for (int i = 0; i < 6; ++i) {
    Instance inst;
    inst.user_id = "u";
    inst.form_day = i;
    inst.features = {0.0};
    inst.target = 5.0;
    xs.instances.push_back(inst);
  }
  BinnedSet b = bin_top_bottom(xs, 0.3, BinMode::kUniq);
  EXPECT_TRUE(b.indices.empty());
}

TEST(BinTopBottom, PersGivesBothClassesToShiftedUsers) {
  InstanceSet xs;
  xs.feature_dim = 1;
  for (int i = 0; i < 10; ++i) {
    Instance a;
    a.user_id = "a";
    a.form_day = i;
    a.features = {0.0};
    a.target = static_cast<double>(i);
    xs.instances.push_back(a);
    Instance b;
    b.user_id = "b";
    b.form_day = i;
    b.features = {0.0};
    b.target = static_cast<double>(i) + 20.0;
    xs.instances.push_back(b);
  }
  BinnedSet pers = bin_top_bottom(xs, 0.3, BinMode::kPers);
  std::map<std::string, std::set<int>> classes;
  for (std::size_t i = 0; i < pers.indices.size(); ++i)
    classes[xs.instances[pers.indices[i]].user_id].insert(pers.labels[i]);
  EXPECT_EQ(classes.at("a").size(), 2u);
  EXPECT_EQ(classes.at("b").size(), 2u);

  // UNIQ on the same data bins user a entirely low and user b entirely high.
  BinnedSet uniq = bin_top_bottom(xs, 0.3, BinMode::kUniq);
  std::map<std::string, std::set<int>> uclasses;
  for (std::size_t i = 0; i < uniq.indices.size(); ++i)
    uclasses[xs.instances[uniq.indices[i]].user_id].insert(uniq.labels[i]);
  EXPECT_EQ(uclasses.at("a").size(), 1u);
  EXPECT_EQ(uclasses.at("b").size(), 1u);
}

TEST(BinTopBottom, SmallPersPoolSkippedWithWarning) {
  InstanceSet xs;
  xs.feature_dim = 1;
  for (int i = 0; i < 8; ++i) {
    Instance a;
    a.user_id = "big";
    a.form_day = i;
    a.features = {0.0};
    a.target = static_cast<double>(i);
    xs.instances.push_back(a);
  }
  Instance tiny;
  tiny.user_id = "tiny";
  tiny.form_day = 0;
  tiny.features = {0.0};
  tiny.target = 1.0;
  xs.instances.push_back(tiny);
  BinnedSet b = bin_top_bottom(xs, 0.3, BinMode::kPers);
  ASSERT_EQ(b.skipped_users.size(), 1u);
  EXPECT_EQ(b.skipped_users[0], "tiny");
}

TEST(BinTopBottom, UniqBalancedUpToTies) {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    InstanceSet xs;
    xs.feature_dim = 1;
    int n = 8 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      Instance inst;
      inst.user_id = "u";
      inst.form_day = i;
      inst.features = {0.0};
      inst.target = rng.normal(0, 3);
      xs.instances.push_back(inst);
    }
    BinnedSet b = bin_top_bottom(xs, 0.3, BinMode::kUniq);
    int low = 0, high = 0;
    for (int l : b.labels) (l == 0 ? low : high) += 1;
    // Continuous scores: no ties, both classes exactly floor(0.3 n).
    EXPECT_EQ(low, high);
    EXPECT_EQ(low, static_cast<int>(0.3 * n));
  }
}
