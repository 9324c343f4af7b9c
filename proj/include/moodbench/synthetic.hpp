#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "moodbench/rng.hpp"
#include "moodbench/types.hpp"

namespace moodbench {

/// Parameters of the synthetic longitudinal panel. Targets follow a per-user
/// AR(1) around a user baseline; feature channels split into pure noise,
/// identity-carrying, and state-carrying blocks so each evaluation bias can
/// be reproduced at desk scale.
struct GenConfig {
  int n_users = 2;
  int days_per_user = 2;
  double user_baseline_sd = 1.0;   // sd of per-user baselines around mid-range
  double within_user_sd = 1.0;     // marginal sd of the state around the baseline
  double ar_coefficient = 0.0;     // phi in [0, 1)
  int d_noise = 1;
  int d_id = 0;
  int d_signal = 0;
  double signal_gain = 1.0;        // beta on (state - baseline) in signal channels
  double identity_gain = 1.0;      // scale of the per-user constant offsets
  int report_every_k_days = 1;
  std::string target_name = "mood";
  double target_lo = 10.0;
  double target_hi = 50.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_users < 2) throw ConfigError("n_users must be >= 2");
    if (days_per_user < 2) throw ConfigError("days_per_user must be >= 2");
    if (user_baseline_sd < 0.0) throw ConfigError("user_baseline_sd must be >= 0");
    if (within_user_sd <= 0.0) throw ConfigError("within_user_sd must be > 0");
    if (ar_coefficient < 0.0 || ar_coefficient >= 1.0)
      throw ConfigError("ar_coefficient must be in [0, 1)");
    if (d_noise < 0 || d_id < 0 || d_signal < 0)
      throw ConfigError("channel counts must be >= 0");
    if (d_noise + d_id + d_signal < 1)
      throw ConfigError("d_noise + d_id + d_signal must be >= 1");
    if (report_every_k_days < 1)
      throw ConfigError("report_every_k_days must be >= 1");
    if (target_hi <= target_lo) throw ConfigError("target_hi must exceed target_lo");
  }
};

/// Deterministic given cfg.seed. Per user u: baseline b_u ~ N(mid, sd_b^2);
/// state m_t = b_u + phi*(m_{t-1} - b_u) + eps, eps ~ N(0, sd_w^2*(1-phi^2)),
/// so the marginal within-user sd stays sd_w for any phi; states are clipped
/// to the target range. Channels: noise iid N(0,1); id = gain*offset_u + N(0,1)
/// with a per-user constant offset vector; signal = beta*(m_t - b_u) + N(0,1).
inline Dataset generate_synthetic(const GenConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.feature_dim = cfg.d_noise + cfg.d_id + cfg.d_signal;
  ds.target_ranges[cfg.target_name] = {cfg.target_lo, cfg.target_hi};

  const double mid = 0.5 * (cfg.target_lo + cfg.target_hi);
  const double phi = cfg.ar_coefficient;
  const double innov_sd = cfg.within_user_sd * std::sqrt(1.0 - phi * phi);
  auto clip = [&](double v) {
    return std::clamp(v, cfg.target_lo, cfg.target_hi);
  };

  int digits = 1;
  for (int n = cfg.n_users; n >= 10; n /= 10) ++digits;

  for (int u = 0; u < cfg.n_users; ++u) {
    // One stream per user keeps the panel stable when n_users changes.
    Rng rng(child_seed(cfg.seed, static_cast<std::uint64_t>(u)));
    std::string uid = "u";
    std::string num = std::to_string(u);
    uid.append(digits - static_cast<int>(num.size()), '0');
    uid += num;

    const double baseline = rng.normal(mid, cfg.user_baseline_sd);
    std::vector<double> id_offset(cfg.d_id);
    for (double& o : id_offset) o = rng.normal();

    double state = clip(rng.normal(baseline, cfg.within_user_sd));
    for (int t = 0; t < cfg.days_per_user; ++t) {
      if (t > 0)
        state = clip(baseline + phi * (state - baseline) + rng.normal(0.0, innov_sd));

      RawDay rd;
      rd.user_id = uid;
      rd.day = t;
      rd.features.reserve(ds.feature_dim);
      for (int j = 0; j < cfg.d_noise; ++j) rd.features.push_back(rng.normal());
      for (int j = 0; j < cfg.d_id; ++j)
        rd.features.push_back(cfg.identity_gain * id_offset[j] + rng.normal());
      for (int j = 0; j < cfg.d_signal; ++j)
        rd.features.push_back(cfg.signal_gain * (state - baseline) + rng.normal());
      ds.raw_days.push_back(std::move(rd));

      if (t % cfg.report_every_k_days == 0) {
        MoodReport r;
        r.user_id = uid;
        r.day = t;
        r.targets[cfg.target_name] = state;
        ds.reports.push_back(std::move(r));
      }
    }
  }
  return ds;
}

/// Replaces every event-level feature vector with iid N(0,1) of the same
/// length; reports are untouched. Window aggregation downstream then turns
/// these into overlapping-window noise, which is the point of the ablation.
inline Dataset randomize_raw_features(const Dataset& ds, std::uint64_t seed) {
  Dataset out = ds;
  auto raws = out.raw_days;
  std::sort(raws.begin(), raws.end(), [](const RawDay& a, const RawDay& b) {
    return std::tie(a.user_id, a.day) < std::tie(b.user_id, b.day);
  });
  Rng rng(seed);
  for (auto& rd : raws)
    for (double& v : rd.features) v = rng.normal();
  out.raw_days = std::move(raws);
  return out;
}

}  // namespace moodbench
