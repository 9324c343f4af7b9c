#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "moodbench/types.hpp"

namespace moodbench {

// Shortest round-trippable decimal form; keeps files byte-stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

namespace detail {

inline double parse_double_cell(const std::string& cell, const std::string& file,
                                std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw DataError(file + ":" + std::to_string(line_no) +
                    ": cannot parse number '" + cell + "'");
  }
  return v;
}

inline int parse_int_cell(const std::string& cell, const std::string& file,
                          std::size_t line_no) {
  int v = 0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw DataError(file + ":" + std::to_string(line_no) +
                    ": cannot parse integer '" + cell + "'");
  }
  return v;
}

inline void check_user_token(const std::string& id, const std::string& file,
                             std::size_t line_no) {
  if (id.empty() || id.find_first_of(",\r\n\"") != std::string::npos) {
    throw DataError(file + ":" + std::to_string(line_no) + ": bad user_id '" +
                    id + "'");
  }
}

}  // namespace detail

enum class SameDayPolicy { kAverage, kLast };

/// Reads raw_features.csv (`user_id,day,f0,...`) and reports.csv
/// (`user_id,day,<target>,...`, blanks allowed) and validates the corpus
/// invariants. Multiple same-day reports for one target are averaged unless
/// `policy` selects the last row in file order.
inline Dataset load_dataset(const std::string& raw_path,
                            const std::string& reports_path,
                            const std::map<std::string, TargetRange>& target_ranges,
                            SameDayPolicy policy = SameDayPolicy::kAverage,
                            bool allow_targets_only = false) {
  Dataset ds;
  ds.target_ranges = target_ranges;

  std::ifstream raw(raw_path);
  if (!raw) throw DataError("cannot open " + raw_path);
  std::string line;
  std::size_t line_no = 0;
  int dim = -1;
  std::set<std::pair<std::string, int>> seen;
  if (!std::getline(raw, line)) throw DataError(raw_path + ": empty file");
  ++line_no;
  {
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "user_id" || header[1] != "day")
      throw DataError(raw_path + ":1: expected header user_id,day,f0,...");
    dim = static_cast<int>(header.size()) - 2;
  }
  while (std::getline(raw, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != dim + 2)
      throw DataError(raw_path + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(dim + 2) + " cells, got " +
                      std::to_string(cells.size()));
    RawDay rd;
    rd.user_id = cells[0];
    detail::check_user_token(rd.user_id, raw_path, line_no);
    rd.day = detail::parse_int_cell(cells[1], raw_path, line_no);
    if (rd.day < 0)
      throw DataError(raw_path + ":" + std::to_string(line_no) +
                      ": negative day index");
    if (!seen.insert({rd.user_id, rd.day}).second)
      throw DataError(raw_path + ":" + std::to_string(line_no) +
                      ": duplicate raw row for (" + rd.user_id + ", day " +
                      std::to_string(rd.day) + ")");
    rd.features.reserve(dim);
    for (int j = 0; j < dim; ++j)
      rd.features.push_back(detail::parse_double_cell(cells[2 + j], raw_path, line_no));
    ds.raw_days.push_back(std::move(rd));
  }
  ds.feature_dim = dim;

  std::ifstream rep(reports_path);
  if (!rep) throw DataError("cannot open " + reports_path);
  line_no = 0;
  if (!std::getline(rep, line)) throw DataError(reports_path + ": empty file");
  ++line_no;
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "user_id" || header[1] != "day")
    throw DataError(reports_path + ":1: expected header user_id,day,<targets>");
  std::vector<std::string> target_names(header.begin() + 2, header.end());
  for (const auto& t : target_names) {
    if (!ds.target_ranges.count(t))
      throw DataError(reports_path + ": no declared range for target '" + t + "'");
  }

  // (user, day, target) -> accumulated values, in first-appearance order.
  std::map<std::pair<std::string, int>, std::map<std::string, std::vector<double>>> acc;
  while (std::getline(rep, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError(reports_path + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) +
                      " cells, got " + std::to_string(cells.size()));
    std::string user = cells[0];
    detail::check_user_token(user, reports_path, line_no);
    int day = detail::parse_int_cell(cells[1], reports_path, line_no);
    if (day < 0)
      throw DataError(reports_path + ":" + std::to_string(line_no) +
                      ": negative day index");
    for (std::size_t j = 0; j < target_names.size(); ++j) {
      const std::string& cell = cells[2 + j];
      if (cell.empty()) continue;
      double v = detail::parse_double_cell(cell, reports_path, line_no);
      const auto& range = ds.target_ranges.at(target_names[j]);
      if (v < range.lo || v > range.hi)
        throw DataError(reports_path + ":" + std::to_string(line_no) + ": " +
                        user + " day " + std::to_string(day) + " target '" +
                        target_names[j] + "' = " + format_double(v) +
                        " outside [" + format_double(range.lo) + ", " +
                        format_double(range.hi) + "]");
      acc[{user, day}][target_names[j]].push_back(v);
    }
  }
  for (auto& [key, per_target] : acc) {
    MoodReport r;
    r.user_id = key.first;
    r.day = key.second;
    for (auto& [name, values] : per_target) {
      if (policy == SameDayPolicy::kLast) {
        r.targets[name] = values.back();
      } else {
        double sum = 0.0;
        for (double v : values) sum += v;
        r.targets[name] = sum / static_cast<double>(values.size());
      }
    }
    ds.reports.push_back(std::move(r));
  }

  std::set<std::string> raw_users;
  for (const auto& rd : ds.raw_days) raw_users.insert(rd.user_id);
  ds.targets_only = ds.raw_days.empty() && allow_targets_only;
  if (!ds.targets_only) {
    for (const auto& r : ds.reports) {
      if (!raw_users.count(r.user_id))
        throw DataError(reports_path + ": report user '" + r.user_id +
                        "' has no raw feature rows");
    }
  }
  return ds;
}

inline void write_dataset_csv(const Dataset& ds, const std::string& raw_path,
                              const std::string& reports_path) {
  std::ofstream raw(raw_path);
  if (!raw) throw DataError("cannot write " + raw_path);
  raw << "user_id,day";
  for (int j = 0; j < ds.feature_dim; ++j) raw << ",f" << j;
  raw << "\n";
  auto raws = ds.raw_days;
  std::sort(raws.begin(), raws.end(), [](const RawDay& a, const RawDay& b) {
    return std::tie(a.user_id, a.day) < std::tie(b.user_id, b.day);
  });
  for (const auto& rd : raws) {
    raw << rd.user_id << ',' << rd.day;
    for (double v : rd.features) raw << ',' << format_double(v);
    raw << "\n";
  }

  std::ofstream rep(reports_path);
  if (!rep) throw DataError("cannot write " + reports_path);
  rep << "user_id,day";
  std::vector<std::string> names;
  for (const auto& [name, range] : ds.target_ranges) names.push_back(name);
  for (const auto& n : names) rep << ',' << n;
  rep << "\n";
  auto reports = ds.reports;
  std::sort(reports.begin(), reports.end(),
            [](const MoodReport& a, const MoodReport& b) {
              return std::tie(a.user_id, a.day) < std::tie(b.user_id, b.day);
            });
  for (const auto& r : reports) {
    rep << r.user_id << ',' << r.day;
    for (const auto& n : names) {
      rep << ',';
      auto it = r.targets.find(n);
      if (it != r.targets.end()) rep << format_double(it->second);
    }
    rep << "\n";
  }
}

/// FNV-1a over the canonical serialization; used in report provenance.
inline std::string dataset_digest(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  auto raws = ds.raw_days;
  std::sort(raws.begin(), raws.end(), [](const RawDay& a, const RawDay& b) {
    return std::tie(a.user_id, a.day) < std::tie(b.user_id, b.day);
  });
  for (const auto& rd : raws) {
    mix(rd.user_id);
    mix(std::to_string(rd.day));
    for (double v : rd.features) mix(format_double(v));
  }
  auto reports = ds.reports;
  std::sort(reports.begin(), reports.end(),
            [](const MoodReport& a, const MoodReport& b) {
              return std::tie(a.user_id, a.day) < std::tie(b.user_id, b.day);
            });
  for (const auto& r : reports) {
    mix(r.user_id);
    mix(std::to_string(r.day));
    for (const auto& [name, v] : r.targets) {
      mix(name);
      mix(format_double(v));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace moodbench
