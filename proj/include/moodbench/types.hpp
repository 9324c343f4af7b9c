#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace moodbench {

// Error taxonomy, mapped to CLI exit codes by the tool layer:
// config_error -> 2, data_error -> 3, precondition_error -> 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// One user-day of event-level feature values. Feature length is constant
/// across a dataset.
struct RawDay {
  std::string user_id;
  int day = 0;
  std::vector<double> features;
};

/// One self-report: per-target scores for a (user, day). Multiple same-day
/// reports are averaged at load time.
struct MoodReport {
  std::string user_id;
  int day = 0;
  std::map<std::string, double> targets;
};

struct TargetRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct Dataset {
  std::vector<RawDay> raw_days;
  std::vector<MoodReport> reports;
  std::map<std::string, TargetRange> target_ranges;
  int feature_dim = 0;
  bool targets_only = false;  // reports without any raw rows are allowed
};

/// Aggregated feature vector + target for one mood form.
/// Window is [start_day, end_day], inclusive, with end_day == form_day.
struct Instance {
  std::string user_id;
  int form_day = 0;
  int window_start = 0;
  int window_end = 0;
  std::vector<double> features;
  double target = 0.0;
  std::map<std::string, double> aux_targets;  // co-targets reported on form_day
};

enum class Aggregation { kMean, kSum };

struct InstanceSet {
  std::vector<Instance> instances;
  std::string target_name;
  TargetRange target_range;
  int feature_dim = 0;      // total per-instance length
  int n_lag_columns = 0;    // trailing columns that are prior target values
  int window_days = 1;
  Aggregation aggregation = Aggregation::kMean;
  // Reports that produced no instance, by reason.
  int dropped_empty_window = 0;
  int dropped_insufficient_history = 0;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

enum class Protocol { kLouocv, kLoiocv, kMixed };

inline const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kLouocv: return "LOUOCV";
    case Protocol::kLoiocv: return "LOIOCV";
    case Protocol::kMixed: return "MIXED";
  }
  return "?";
}

struct Split {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  Protocol protocol = Protocol::kMixed;
  int fold = 0;
};

/// Quantified leakage findings for one split.
struct LeakageReport {
  Protocol protocol = Protocol::kMixed;
  int fold = 0;
  int user_overlap = 0;            // test instances whose user appears in train
  double max_window_overlap = 0.0; // max |train ∩ test window| / |test window|, same user
  bool target_leak = false;        // some feature column is a prior-target lag
};

}  // namespace moodbench
