// Command-line front end: synthetic data generation, split auditing, and the
// experiment pipelines. Exit codes: 0 ok, 2 config error, 3 data validation
// error, 4 precondition failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "moodbench/moodbench.hpp"

namespace fs = std::filesystem;
using namespace moodbench;

namespace {

// Loads <dir>/raw_features.csv + reports.csv. Target ranges come from
// gen_config.json when the directory holds synthetic data; otherwise they are
// inferred from the observed values (noted on stderr).
Dataset load_dir(const std::string& dir, SameDayPolicy policy) {
  const fs::path raw = fs::path(dir) / "raw_features.csv";
  const fs::path rep = fs::path(dir) / "reports.csv";
  const fs::path gen = fs::path(dir) / "gen_config.json";

  std::map<std::string, TargetRange> ranges;
  if (fs::exists(gen)) {
    GenConfig cfg = load_gen_config(gen.string());
    ranges[cfg.target_name] = {cfg.target_lo, cfg.target_hi};
    return load_dataset(raw.string(), rep.string(), ranges, policy);
  }

  // No generator echo: scan the report header and infer per-target ranges.
  std::ifstream in(rep.string());
  if (!in) throw DataError("cannot open " + rep.string());
  std::string header;
  std::getline(in, header);
  auto cells = split_csv_line(header);
  if (cells.size() < 3) throw DataError(rep.string() + ": no target columns");
  std::vector<std::vector<double>> values(cells.size() - 2);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != cells.size())
      throw DataError(rep.string() + ":" + std::to_string(line_no) +
                      ": ragged row");
    for (std::size_t j = 2; j < row.size(); ++j) {
      if (row[j].empty()) continue;
      values[j - 2].push_back(std::stod(row[j]));
    }
  }
  for (std::size_t j = 2; j < cells.size(); ++j) {
    if (values[j - 2].empty())
      throw DataError(rep.string() + ": target '" + cells[j] + "' has no values");
    auto [lo, hi] = std::minmax_element(values[j - 2].begin(), values[j - 2].end());
    ranges[cells[j]] = {*lo, *hi == *lo ? *lo + 1.0 : *hi};
  }
  std::cerr << "note: no gen_config.json in " << dir
            << "; target ranges inferred from observed values\n";
  return load_dataset(raw.string(), rep.string(), ranges, policy);
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  GenConfig cfg = load_gen_config(config_path);
  Dataset ds = generate_synthetic(cfg);
  fs::create_directories(out_dir);
  write_dataset_csv(ds, (fs::path(out_dir) / "raw_features.csv").string(),
                    (fs::path(out_dir) / "reports.csv").string());
  std::ofstream echo(fs::path(out_dir) / "gen_config.json");
  if (!echo) throw DataError("cannot write gen_config.json");
  echo << gen_config_json(cfg).dump(2) << "\n";
  std::cout << "wrote " << ds.raw_days.size() << " raw rows, "
            << ds.reports.size() << " reports to " << out_dir << "\n";
  return 0;
}

int cmd_audit(const std::string& data_dir, const std::string& protocol,
              int window, int lags, int mixed_k, std::uint64_t seed,
              const std::string& target_opt, const std::string& out_path) {
  Dataset ds = load_dir(data_dir, SameDayPolicy::kAverage);
  std::string target = target_opt;
  if (target.empty()) {
    if (ds.target_ranges.empty()) throw DataError("dataset has no targets");
    target = ds.target_ranges.begin()->first;
  }
  InstanceSet xs = build_instances(ds, target, window, Aggregation::kMean, lags);
  if (xs.empty()) throw PreconditionError("no instances at this window");

  std::vector<Split> splits;
  if (protocol == "louocv") {
    splits = louocv_splits(xs);
  } else if (protocol == "loiocv") {
    LoiocvPlan plan = loiocv_splits(xs);
    for (const auto& uid : plan.skipped_users)
      std::cerr << "note: user " << uid << " skipped (single instance)\n";
    splits = plan.splits;
  } else if (protocol == "mixed") {
    splits = mixed_kfold_splits(xs, mixed_k, seed);
  } else {
    throw ConfigError("unknown protocol '" + protocol + "'");
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw DataError("cannot write " + out_path);
    out = &file;
  }
  *out << leakage_csv_header() << "\n";
  for (const Split& s : splits) *out << leakage_csv_row(audit_split(s, xs)) << "\n";
  return 0;
}

int cmd_run(const std::string& experiment, const std::string& data_dir,
            const std::string& config_path, const std::string& out_path,
            const std::string& format, bool seed_given, std::uint64_t seed) {
  ExperimentConfig cfg = load_experiment_config(config_path, experiment);
  if (seed_given) cfg.seed = seed;
  Dataset ds = load_dir(data_dir, cfg.last_report_of_day_only
                                      ? SameDayPolicy::kLast
                                      : SameDayPolicy::kAverage);
  ReportTable rt = run_experiment(ds, cfg);
  ReportFormat fmt =
      format == "markdown" ? ReportFormat::kMarkdown : ReportFormat::kCsv;
  emit_report(rt, out_path, fmt);
  std::cout << "wrote " << rt.rows.size() << " rows to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leakage-aware evaluation harness for longitudinal per-user "
               "mood prediction"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  std::string gen_config, gen_out;
  gen->add_option("--config", gen_config, "Generator config JSON")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* audit = app.add_subcommand("audit", "Audit splits of a dataset");
  std::string audit_data, audit_protocol, audit_target, audit_out;
  int audit_window = 1, audit_lags = 0, audit_k = 5;
  std::uint64_t audit_seed = 0;
  audit->add_option("--data", audit_data, "Dataset directory")->required();
  audit->add_option("--protocol", audit_protocol, "loiocv|louocv|mixed")->required();
  audit->add_option("--window", audit_window, "Aggregation window in days")
      ->required();
  audit->add_option("--lags", audit_lags, "Prior-target lag features");
  audit->add_option("--k", audit_k, "Folds for mixed");
  audit->add_option("--seed", audit_seed, "Shuffle seed for mixed");
  audit->add_option("--target", audit_target, "Target column (default: first)");
  audit->add_option("--out", audit_out, "Write CSV here instead of stdout");

  auto* run = app.add_subcommand("run", "Run an experiment pipeline");
  std::string run_experiment_name, run_data, run_config, run_out;
  std::string run_format = "csv";
  std::uint64_t run_seed = 0;
  run->add_option("--experiment", run_experiment_name, "p1|p2|p3r|p3c")->required();
  run->add_option("--data", run_data, "Dataset directory")->required();
  run->add_option("--config", run_config, "Experiment config JSON")->required();
  run->add_option("--out", run_out, "Report path")->required();
  run->add_option("--format", run_format, "csv|markdown");
  auto* seed_opt = run->add_option("--seed", run_seed, "Override config seed");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(gen_config, gen_out);
    if (audit->parsed())
      return cmd_audit(audit_data, audit_protocol, audit_window, audit_lags,
                       audit_k, audit_seed, audit_target, audit_out);
    if (run->parsed()) {
      if (run_format != "csv" && run_format != "markdown")
        throw ConfigError("--format must be csv or markdown");
      return cmd_run(run_experiment_name, run_data, run_config, run_out,
                     run_format, seed_opt->count() > 0, run_seed);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
