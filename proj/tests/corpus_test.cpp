#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "moodbench/csv_io.hpp"
#include "moodbench/instances.hpp"
#include "moodbench/synthetic.hpp"

using namespace moodbench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::path(::testing::TempDir()) /
                 ("corpus_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, TargetRange> mood_range() {
  return {{"mood", {10.0, 50.0}}};
}

// One-way decomposition of target variance into between-user and within-user
// parts, computed directly from the emitted reports.
double between_user_share(const Dataset& ds, const std::string& target) {
  std::map<std::string, std::vector<double>> per_user;
  for (const auto& r : ds.reports) per_user[r.user_id].push_back(r.targets.at(target));
  double grand = 0.0;
  std::size_t n = 0;
  for (const auto& [uid, v] : per_user)
    for (double x : v) {
      grand += x;
      ++n;
    }
  grand /= static_cast<double>(n);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& [uid, v] : per_user) {
    double mean = 0.0;
    for (double x : v) mean += x / v.size();
    ssb += v.size() * (mean - grand) * (mean - grand);
    for (double x : v) ssw += (x - mean) * (x - mean);
  }
  return ssb / (ssb + ssw);
}

}  // namespace

TEST(LoadDataset, RoundTripSmallFile) {
  fs::path dir = temp_dir();
  write_file(dir / "raw.csv",
             "user_id,day,f0,f1,f2,f3\n"
             "u1,0,1,2,3,4\nu1,1,1,2,3,4\nu1,2,1,2,3,4\n"
             "u2,0,5,6,7,8\nu2,1,5,6,7,8\nu2,2,5,6,7,8\n");
  write_file(dir / "rep.csv",
             "user_id,day,mood\n"
             "u1,0,30\nu1,1,31\nu1,2,32\nu2,0,40\nu2,1,41\nu2,2,42\n");
  Dataset ds = load_dataset((dir / "raw.csv").string(), (dir / "rep.csv").string(),
                            mood_range());
  EXPECT_EQ(ds.feature_dim, 4);
  EXPECT_EQ(ds.reports.size(), 6u);
  EXPECT_EQ(ds.raw_days.size(), 6u);
}

TEST(LoadDataset, OutOfRangeTargetNamesTheCulprit) {
  fs::path dir = temp_dir();
  write_file(dir / "raw.csv", "user_id,day,f0\nu1,0,1\n");
  write_file(dir / "rep.csv", "user_id,day,stress\nu1,0,7\n");
  try {
    load_dataset((dir / "raw.csv").string(), (dir / "rep.csv").string(),
                 {{"stress", {0.0, 4.0}}});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("u1"), std::string::npos);
    EXPECT_NE(msg.find("stress"), std::string::npos);
  }
}

TEST(LoadDataset, DuplicateRawRowRejected) {
  fs::path dir = temp_dir();
  write_file(dir / "raw.csv", "user_id,day,f0\nu1,5,1\nu1,5,2\n");
  write_file(dir / "rep.csv", "user_id,day,mood\nu1,5,30\n");
  EXPECT_THROW(load_dataset((dir / "raw.csv").string(), (dir / "rep.csv").string(),
                            mood_range()),
               DataError);
}

TEST(LoadDataset, MalformedRowReportsLineNumber) {
  fs::path dir = temp_dir();
  write_file(dir / "raw.csv", "user_id,day,f0\nu1,0,1\nu1,one,2\n");
  write_file(dir / "rep.csv", "user_id,day,mood\nu1,0,30\n");
  try {
    load_dataset((dir / "raw.csv").string(), (dir / "rep.csv").string(),
                 mood_range());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos);
  }
}

TEST(LoadDataset, InconsistentFeatureDimRejected) {
  fs::path dir = temp_dir();
  write_file(dir / "raw.csv", "user_id,day,f0,f1\nu1,0,1,2\nu1,1,1\n");
  write_file(dir / "rep.csv", "user_id,day,mood\nu1,0,30\n");
  EXPECT_THROW(load_dataset((dir / "raw.csv").string(), (dir / "rep.csv").string(),
                            mood_range()),
               DataError);
}

TEST(LoadDataset, SameDayReportsAveragedOrLast) {
  fs::path dir = temp_dir();
  write_file(dir / "raw.csv", "user_id,day,f0\nu1,3,1\n");
  write_file(dir / "rep.csv", "user_id,day,mood\nu1,3,30\nu1,3,34\n");
  Dataset avg = load_dataset((dir / "raw.csv").string(), (dir / "rep.csv").string(),
                             mood_range());
  ASSERT_EQ(avg.reports.size(), 1u);
  EXPECT_DOUBLE_EQ(avg.reports[0].targets.at("mood"), 32.0);
  Dataset last = load_dataset((dir / "raw.csv").string(), (dir / "rep.csv").string(),
                              mood_range(), SameDayPolicy::kLast);
  EXPECT_DOUBLE_EQ(last.reports[0].targets.at("mood"), 34.0);
}

TEST(LoadDataset, ReportUserWithoutRawRowsRejected) {
  fs::path dir = temp_dir();
  write_file(dir / "raw.csv", "user_id,day,f0\nu1,0,1\n");
  write_file(dir / "rep.csv", "user_id,day,mood\nu1,0,30\nghost,0,30\n");
  EXPECT_THROW(load_dataset((dir / "raw.csv").string(), (dir / "rep.csv").string(),
                            mood_range()),
               DataError);
}

TEST(GenerateSynthetic, ZeroBaselineSdKillsBetweenUserShare) {
  GenConfig cfg;
  cfg.n_users = 20;
  cfg.days_per_user = 60;
  cfg.user_baseline_sd = 0.0;
  cfg.within_user_sd = 3.0;
  cfg.d_noise = 1;
  cfg.d_id = 0;
  cfg.seed = 5;
  Dataset ds = generate_synthetic(cfg);
  EXPECT_LT(between_user_share(ds, "mood"), 0.05);
}

TEST(GenerateSynthetic, ScenarioAShareMatchesAnova) {
  // sd_b=6, sd_w=3 puts the expected between-user share at 36/45 = 0.8.
  GenConfig cfg;
  cfg.n_users = 20;
  cfg.days_per_user = 60;
  cfg.user_baseline_sd = 6.0;
  cfg.within_user_sd = 3.0;
  cfg.ar_coefficient = 0.3;
  cfg.d_noise = 5;
  cfg.d_id = 5;
  cfg.identity_gain = 3.0;
  cfg.seed = 20260809;
  Dataset ds = generate_synthetic(cfg);
  EXPECT_NEAR(between_user_share(ds, "mood"), 0.8, 0.1);
}

TEST(GenerateSynthetic, DeterministicGivenSeed) {
  GenConfig cfg;
  cfg.n_users = 4;
  cfg.days_per_user = 12;
  cfg.d_noise = 2;
  cfg.d_id = 1;
  cfg.seed = 99;
  fs::path dir = temp_dir();
  Dataset a = generate_synthetic(cfg);
  Dataset b = generate_synthetic(cfg);
  write_dataset_csv(a, (dir / "a_raw.csv").string(), (dir / "a_rep.csv").string());
  write_dataset_csv(b, (dir / "b_raw.csv").string(), (dir / "b_rep.csv").string());
  EXPECT_EQ(read_file(dir / "a_raw.csv"), read_file(dir / "b_raw.csv"));
  EXPECT_EQ(read_file(dir / "a_rep.csv"), read_file(dir / "b_rep.csv"));
}

TEST(GenerateSynthetic, WhiteNoiseTargetsHaveNoLag1Autocorrelation) {
  GenConfig cfg;
  cfg.n_users = 4;
  cfg.days_per_user = 200;
  cfg.user_baseline_sd = 2.0;
  cfg.within_user_sd = 3.0;
  cfg.ar_coefficient = 0.0;
  cfg.d_noise = 1;
  cfg.seed = 17;
  Dataset ds = generate_synthetic(cfg);
  std::map<std::string, std::vector<double>> per_user;
  for (const auto& r : ds.reports) per_user[r.user_id].push_back(r.targets.at("mood"));
  for (const auto& [uid, v] : per_user) {
    double mean = 0.0;
    for (double x : v) mean += x / v.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      num += (v[i] - mean) * (v[i + 1] - mean);
    for (double x : v) den += (x - mean) * (x - mean);
    EXPECT_NEAR(num / den, 0.0, 0.15) << uid;
  }
}

TEST(GenerateSynthetic, ValidatesConfig) {
  GenConfig cfg;
  cfg.n_users = 1;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
  cfg = GenConfig{};
  cfg.n_users = 3;
  cfg.days_per_user = 5;
  cfg.d_noise = 0;
  cfg.d_id = 0;
  cfg.d_signal = 0;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
  cfg = GenConfig{};
  cfg.n_users = 3;
  cfg.days_per_user = 5;
  cfg.ar_coefficient = 1.0;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
}

TEST(RandomizeRawFeatures, PreservesShapeAndReports) {
  GenConfig cfg;
  cfg.n_users = 3;
  cfg.days_per_user = 10;
  cfg.d_noise = 2;
  cfg.d_signal = 1;
  cfg.seed = 11;
  Dataset ds = generate_synthetic(cfg);
  Dataset rnd = randomize_raw_features(ds, 1234);
  EXPECT_EQ(rnd.feature_dim, ds.feature_dim);
  ASSERT_EQ(rnd.reports.size(), ds.reports.size());
  auto sorted_by = [](std::vector<MoodReport> v) {
    std::sort(v.begin(), v.end(), [](const MoodReport& a, const MoodReport& b) {
      return std::tie(a.user_id, a.day) < std::tie(b.user_id, b.day);
    });
    return v;
  };
  auto a = sorted_by(ds.reports), b = sorted_by(rnd.reports);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].user_id, b[i].user_id);
    EXPECT_EQ(a[i].day, b[i].day);
    EXPECT_DOUBLE_EQ(a[i].targets.at("mood"), b[i].targets.at("mood"));
  }
}

TEST(RandomizeRawFeatures, StandardNormalMoments) {
  GenConfig cfg;
  cfg.n_users = 10;
  cfg.days_per_user = 1000;
  cfg.d_noise = 3;
  cfg.seed = 2;
  Dataset ds = generate_synthetic(cfg);
  Dataset rnd = randomize_raw_features(ds, 77);
  ASSERT_GE(rnd.raw_days.size(), 10000u);
  for (int j = 0; j < rnd.feature_dim; ++j) {
    double mean = 0.0;
    for (const auto& rd : rnd.raw_days) mean += rd.features[j];
    mean /= static_cast<double>(rnd.raw_days.size());
    EXPECT_GE(mean, -0.05);
    EXPECT_LE(mean, 0.05);
  }
}

namespace {

Dataset tiny_window_dataset() {
  Dataset ds;
  ds.feature_dim = 1;
  ds.target_ranges["mood"] = {10.0, 50.0};
  for (auto [day, value] : {std::pair{1, 2.0}, {2, 4.0}, {3, 6.0}}) {
    RawDay rd;
    rd.user_id = "u1";
    rd.day = day;
    rd.features = {value};
    ds.raw_days.push_back(rd);
  }
  for (auto [day, score] : {std::pair{1, 30.0}, {2, 34.0}, {3, 40.0}}) {
    MoodReport r;
    r.user_id = "u1";
    r.day = day;
    r.targets["mood"] = score;
    ds.reports.push_back(r);
  }
  return ds;
}

}  // namespace

TEST(BuildInstances, HandAggregation) {
  Dataset ds = tiny_window_dataset();
  InstanceSet w2 = build_instances(ds, "mood", 2, Aggregation::kMean, 0);
  ASSERT_EQ(w2.instances.size(), 3u);
  const Instance& day3 = w2.instances[2];
  EXPECT_EQ(day3.form_day, 3);
  ASSERT_EQ(day3.features.size(), 1u);
  EXPECT_DOUBLE_EQ(day3.features[0], 5.0);  // mean of days 2-3

  InstanceSet w1 = build_instances(ds, "mood", 1, Aggregation::kMean, 0);
  EXPECT_DOUBLE_EQ(w1.instances[2].features[0], 6.0);
}

TEST(BuildInstances, LagTailMostRecentFirst) {
  Dataset ds = tiny_window_dataset();
  InstanceSet xs = build_instances(ds, "mood", 2, Aggregation::kMean, 2);
  ASSERT_EQ(xs.instances.size(), 1u);
  ASSERT_EQ(xs.instances[0].features.size(), 3u);
  EXPECT_DOUBLE_EQ(xs.instances[0].features[1], 34.0);
  EXPECT_DOUBLE_EQ(xs.instances[0].features[2], 30.0);
  EXPECT_EQ(xs.n_lag_columns, 2);
  EXPECT_EQ(xs.dropped_insufficient_history, 2);
}

TEST(BuildInstances, WindowInvariants) {
  GenConfig cfg;
  cfg.n_users = 3;
  cfg.days_per_user = 20;
  cfg.d_noise = 2;
  cfg.seed = 31;
  Dataset ds = generate_synthetic(cfg);
  for (int W : {1, 5, 14}) {
    InstanceSet xs = build_instances(ds, "mood", W);
    for (const auto& inst : xs.instances) {
      EXPECT_EQ(inst.window_end, inst.form_day);
      EXPECT_EQ(inst.window_end - inst.window_start + 1,
                std::min(W, inst.form_day + 1));
    }
  }
}

TEST(BuildInstances, W1WindowsDisjointPerUser) {
  GenConfig cfg;
  cfg.n_users = 2;
  cfg.days_per_user = 15;
  cfg.d_noise = 1;
  cfg.seed = 3;
  Dataset ds = generate_synthetic(cfg);
  InstanceSet xs = build_instances(ds, "mood", 1);
  std::map<std::string, std::vector<std::pair<int, int>>> windows;
  for (const auto& inst : xs.instances)
    windows[inst.user_id].emplace_back(inst.window_start, inst.window_end);
  for (auto& [uid, w] : windows) {
    std::sort(w.begin(), w.end());
    for (std::size_t i = 1; i < w.size(); ++i)
      EXPECT_GT(w[i].first, w[i - 1].second);
  }
}

TEST(BuildInstances, RandomizeChangesValuesNotShape) {
  GenConfig cfg;
  cfg.n_users = 2;
  cfg.days_per_user = 10;
  cfg.d_noise = 2;
  cfg.seed = 8;
  Dataset ds = generate_synthetic(cfg);
  InstanceSet base = build_instances(ds, "mood", 3);
  InstanceSet rand = build_instances(randomize_raw_features(ds, 5), "mood", 3);
  ASSERT_EQ(base.instances.size(), rand.instances.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < base.instances.size(); ++i) {
    EXPECT_EQ(base.instances[i].user_id, rand.instances[i].user_id);
    EXPECT_EQ(base.instances[i].form_day, rand.instances[i].form_day);
    ASSERT_EQ(base.instances[i].features.size(), rand.instances[i].features.size());
    for (std::size_t j = 0; j < base.instances[i].features.size(); ++j)
      any_diff |= base.instances[i].features[j] != rand.instances[i].features[j];
    EXPECT_DOUBLE_EQ(base.instances[i].target, rand.instances[i].target);
  }
  EXPECT_TRUE(any_diff);
}

TEST(BuildInstances, EmptyResultIsReportedNotSilent) {
  Dataset ds = tiny_window_dataset();
  InstanceSet xs = build_instances(ds, "mood", 2, Aggregation::kMean, 5);
  EXPECT_TRUE(xs.empty());
  EXPECT_EQ(xs.dropped_insufficient_history, 3);
}
