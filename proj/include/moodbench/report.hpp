#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "moodbench/csv_io.hpp"
#include "moodbench/protocol.hpp"
#include "moodbench/types.hpp"

namespace moodbench {

/// Split-audit totals attached to a result row: user_overlap summed over
/// folds, window overlap maxed, target_leak or-ed.
struct AuditSummary {
  bool present = false;
  int user_overlap = 0;
  double max_window_overlap = 0.0;
  bool target_leak = false;

  static AuditSummary from(const std::vector<LeakageReport>& reports) {
    AuditSummary s;
    s.present = true;
    for (const auto& r : reports) {
      s.user_overlap += r.user_overlap;
      s.max_window_overlap = std::max(s.max_window_overlap, r.max_window_overlap);
      s.target_leak = s.target_leak || r.target_leak;
    }
    return s;
  }
};

struct ReportRow {
  std::string setting;
  std::string protocol;
  std::string mode;
  std::string target;
  std::string metric;
  std::optional<double> value;
  AuditSummary audit;
  std::size_t n = 0;
};

struct ReportTable {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string dataset_digest;
  std::string config_echo;            // canonical JSON
  std::vector<std::string> notes;     // drop counts etc., one line each
  std::vector<ReportRow> rows;
};

inline std::string report_csv_header() {
  return "experiment,setting,protocol,mode,target,metric,value,user_overlap,"
         "max_window_overlap,target_leak,n,seed";
}

inline std::string report_value_token(const std::optional<double>& v) {
  return v ? format_double(*v) : "NA";
}

inline std::string report_row_csv(const ReportTable& rt, const ReportRow& r) {
  std::string line = rt.experiment;
  auto add = [&line](const std::string& cell) {
    line += ',';
    line += cell;
  };
  add(r.setting);
  add(r.protocol);
  add(r.mode);
  add(r.target);
  add(r.metric);
  add(report_value_token(r.value));
  if (r.audit.present) {
    add(std::to_string(r.audit.user_overlap));
    add(format_double(r.audit.max_window_overlap));
    add(r.audit.target_leak ? "true" : "false");
  } else {
    add("NA");
    add("NA");
    add("NA");
  }
  add(std::to_string(r.n));
  add(std::to_string(rt.seed));
  return line;
}

enum class ReportFormat { kCsv, kMarkdown };

/// Deterministic emission: provenance as leading '#' comments, one row per
/// (setting, metric) in assembly order, NA for undefined values.
inline void emit_report(const ReportTable& rt, const std::string& path,
                        ReportFormat format = ReportFormat::kCsv) {
  if (rt.rows.empty()) throw PreconditionError("emit_report: empty table");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  if (format == ReportFormat::kCsv) {
    out << "# experiment: " << rt.experiment << "\n";
    out << "# seed: " << rt.seed << "\n";
    out << "# dataset_digest: " << rt.dataset_digest << "\n";
    out << "# config: " << rt.config_echo << "\n";
    for (const auto& n : rt.notes) out << "# " << n << "\n";
    out << report_csv_header() << "\n";
    for (const auto& r : rt.rows) out << report_row_csv(rt, r) << "\n";
    return;
  }
  out << "# Report: " << rt.experiment << "\n\n";
  out << "- seed: " << rt.seed << "\n";
  out << "- dataset digest: " << rt.dataset_digest << "\n";
  out << "- config: `" << rt.config_echo << "`\n";
  for (const auto& n : rt.notes) out << "- " << n << "\n";
  out << "\n| setting | protocol | mode | target | metric | value | "
         "user_overlap | max_window_overlap | target_leak | n |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rt.rows) {
    out << "| " << r.setting << " | " << r.protocol << " | " << r.mode << " | "
        << r.target << " | " << r.metric << " | " << report_value_token(r.value)
        << " | ";
    if (r.audit.present) {
      out << r.audit.user_overlap << " | " << format_double(r.audit.max_window_overlap)
          << " | " << (r.audit.target_leak ? "true" : "false");
    } else {
      out << "NA | NA | NA";
    }
    out << " | " << r.n << " |\n";
  }
}

/// Reads back the CSV emission (comments skipped); used for round-trip
/// checks and downstream tooling.
inline std::vector<std::vector<std::string>> parse_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != report_csv_header())
        throw DataError(path + ": unexpected report header");
      saw_header = true;
      continue;
    }
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace moodbench
