// Command-line front end: deterministic scenario runs, send-rate/buffer
// sweeps with plot-data emission, dataset assembly, classifier/regressor
// training reports, and the three-way fairness comparison.

#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fairbbr/csv.hpp"
#include "fairbbr/experiment.hpp"
#include "fairbbr/log.hpp"
#include "fairbbr/plot.hpp"
#include "fairbbr/scenario.hpp"
#include "fairbbr/sim.hpp"

namespace {

using namespace fairbbr;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerateData = 3;

struct CommonOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> alpha_mode;
  std::optional<std::string> rtt_prime;
};

void apply_overrides(SimConfig& cfg, const CommonOverrides& o) {
  if (o.seed.has_value()) cfg.seed = *o.seed;
  if (o.alpha_mode.has_value()) cfg.coupled.alpha_mode = parse_alpha_mode(*o.alpha_mode);
  if (o.rtt_prime.has_value()) cfg.coupled.rtt_prime = parse_rtt_prime(*o.rtt_prime);
}

SimConfig load_scenario_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_scenario_text(text);
}

void print_run_stats(const RunStats& rs) {
  for (const auto& [id, fsx] : rs.per_flow) {
    fmt::print(
        "flow {}: offered={} delivered={} copies_sent={} dropped={} "
        "retransmitted={} in_flight={}\n",
        id, fsx.msgs_offered, fsx.msgs_delivered, fsx.copies_sent, fsx.copies_dropped,
        fsx.copies_retransmitted, fsx.in_flight());
  }
  const auto& t = rs.totals;
  fmt::print(
      "totals: offered={} delivered={} copies_sent={} dropped={} retransmitted={} "
      "in_flight={}\n",
      t.msgs_offered, t.msgs_delivered, t.copies_sent, t.copies_dropped,
      t.copies_retransmitted, t.in_flight());
}

int cmd_simulate(const std::string& config_path, const std::string& out_csv,
                 const CommonOverrides& overrides) {
  SimConfig cfg = load_scenario_file(config_path);
  apply_overrides(cfg, overrides);
  Simulator sim(cfg);
  log_info("simulate: {} flows, {} links, {}s, algorithm {}", cfg.flows.size(),
           cfg.links.size(), cfg.duration_s, to_string(cfg.algorithm));
  RunStats rs = sim.run();
  write_metrics_csv(out_csv, sim.metrics_rows());
  print_run_stats(rs);
  fmt::print("metrics written to {}\n", out_csv);
  return kExitOk;
}

std::string cell_file_name(double rate, int buffer) {
  return fmt::format("cell_rate{}_buffer{}.csv", rate, buffer);
}

int cmd_sweep(const std::optional<std::string>& config_path,
              std::vector<double> rates, std::vector<int> buffers,
              const std::string& out_dir, int jobs, bool svg, double duration,
              const CommonOverrides& overrides) {
  SimConfig base =
      config_path.has_value() ? load_scenario_file(*config_path) : exp::default_scenario();
  apply_overrides(base, overrides);
  if (duration > 0) base.duration_s = duration;

  exp::SweepSpec spec;
  spec.send_rates = rates.empty() ? exp::default_sweep().send_rates : rates;
  spec.buffer_sizes = buffers.empty() ? exp::default_sweep().buffer_sizes : buffers;

  fs::create_directories(out_dir);
  log_info("sweep: {} rates x {} buffers, {} jobs", spec.send_rates.size(),
           spec.buffer_sizes.size(), jobs);
  exp::SweepResult sweep = exp::run_sweep(base, spec, jobs);

  for (const auto& cell : sweep.cells) {
    write_metrics_csv((fs::path(out_dir) / cell_file_name(cell.send_rate, cell.buffer))
                          .string(),
                      cell.rows);
  }
  auto tables = exp::sweep_plot_tables(sweep, spec);
  for (const auto& t : tables) {
    auto csv_path = fs::path(out_dir) / (t.name + ".csv");
    exp::write_plot_table_csv(csv_path.string(), t);
    if (svg) {
      exp::write_svg_chart((fs::path(out_dir) / (t.name + ".svg")).string(), t, t.name);
    }
  }
  fmt::print("sweep complete: {} cells, {} aggregate tables in {}\n",
             sweep.cells.size(), tables.size(), out_dir);
  if (!sweep.failures.empty()) {
    for (const auto& failure : sweep.failures) log_error("{}", failure);
    fmt::print("{} cells failed; partial results kept\n", sweep.failures.size());
    return kExitConfig;
  }
  return kExitOk;
}

int cmd_dataset(const std::vector<std::string>& inputs, const std::string& out,
                bool strict) {
  std::vector<MetricsRow> merged;
  size_t skipped = 0;
  for (const auto& path : inputs) {
    auto result = read_metrics_csv(path, strict);
    merged.insert(merged.end(), result.rows.begin(), result.rows.end());
    skipped += result.skipped;
  }
  write_metrics_csv(out, merged);
  fmt::print("dataset: {} rows merged from {} files ({} malformed rows skipped)\n",
             merged.size(), inputs.size(), skipped);
  return kExitOk;
}

int cmd_train(const std::string& dataset_csv, const std::string& report_path,
              const std::string& artifact_dir, uint64_t seed, int runs, int folds,
              double tolerance, bool strict) {
  auto read = read_metrics_csv(dataset_csv, strict);
  log_info("train: {} rows ({} skipped) from {}", read.rows.size(), read.skipped,
           dataset_csv);
  exp::TrainParams params;
  params.num_runs = runs;
  params.folds = folds;
  params.regression_tolerance = tolerance;
  exp::TrainOutput out = exp::run_training(read.rows, seed, params);

  std::string text = out.report_text();
  {
    std::ofstream f(report_path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + report_path + "' for writing");
    f << text;
  }
  fmt::print("{}", text);

  fs::path dir = artifact_dir.empty() ? fs::path(report_path).parent_path()
                                      : fs::path(artifact_dir);
  if (!dir.empty()) fs::create_directories(dir);
  out.svm_artifact.save((dir / "linear_svm.json").string());
  out.tree_artifact.save((dir / "decision_tree.json").string());
  out.mlp_artifact.save((dir / "mlp_classifier.json").string());
  out.regressor_artifact.save((dir / "mlp_regressor.json").string());
  fmt::print("report written to {}, artifacts in {}\n", report_path,
             dir.empty() ? "." : dir.string());
  return kExitOk;
}

int cmd_fairness(const std::optional<std::string>& config_path, const std::string& out_csv,
                 const CommonOverrides& overrides) {
  SimConfig base = config_path.has_value() ? load_scenario_file(*config_path)
                                           : exp::default_fairness_scenario();
  apply_overrides(base, overrides);
  exp::FairnessComparison cmp = exp::run_fairness_comparison(base);
  exp::write_fairness_csv(out_csv, cmp, base.seed);
  for (const auto& algo : cmp.algorithms) {
    fmt::print("jain_index {} = {}\n", to_string(algo.algorithm), algo.jain);
  }
  fmt::print("fairness report written to {}\n", out_csv);
  return kExitOk;
}

int cmd_plot(const std::string& input, const std::string& out, std::string title) {
  auto table = exp::read_plot_table_csv(input);
  if (title.empty()) title = fs::path(input).stem().string();
  exp::write_svg_chart(out, table, title);
  fmt::print("chart written to {}\n", out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic BBR network simulator with coupled-fairness control and a"
               " from-scratch ML pipeline over its measurements"};
  app.require_subcommand(1);

  CommonOverrides overrides;
  std::string config_path, out_path, dataset_path, report_path, artifact_dir;
  std::string plot_input, plot_title;
  std::vector<double> rates;
  std::vector<int> buffers;
  std::vector<std::string> inputs;
  uint64_t seed = 1;
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  int runs = 10, folds = 5;
  double tolerance = 0.10, duration = 0;
  bool svg = false, strict = false;

  auto add_common = [&](CLI::App* cmd, bool with_alpha) {
    cmd->add_option("--seed", seed, "Override the scenario seed")
        ->check(CLI::NonNegativeNumber);
    if (with_alpha) {
      cmd->add_option_function<std::string>(
             "--alpha-mode", [&](const std::string& v) { overrides.alpha_mode = v; },
             "Coupling weight mode: as_printed|per_subflow")
          ->check(CLI::IsMember({"as_printed", "per_subflow"}));
      cmd->add_option_function<std::string>(
             "--rtt-prime", [&](const std::string& v) { overrides.rtt_prime = v; },
             "RTT basis for the coupled BDP: max|min")
          ->check(CLI::IsMember({"max", "min"}));
    }
  };

  auto* simulate = app.add_subcommand("simulate", "Run one scenario and write metrics CSV");
  simulate->add_option("--config", config_path, "Scenario JSON")->required();
  simulate->add_option("--out", out_path, "Metrics CSV output path")->required();
  add_common(simulate, true);

  auto* sweep = app.add_subcommand(
      "sweep", "Run a send-rate x buffer-size grid and write per-cell and plot data");
  sweep->add_option("--config", config_path, "Base scenario JSON (default built in)");
  sweep->add_option("--rates", rates, "Send rates to sweep (messages/s)")->delimiter(',');
  sweep->add_option("--buffers", buffers, "Buffer sizes to sweep (packets)")
      ->delimiter(',');
  sweep->add_option("--out", out_path, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Parallel cells");
  sweep->add_option("--duration", duration, "Seconds per cell (0 = scenario value)");
  sweep->add_flag("--svg", svg, "Also render SVG charts");
  add_common(sweep, true);

  auto* dataset = app.add_subcommand("dataset", "Merge and validate metrics CSV files");
  dataset->add_option("--inputs", inputs, "Input CSV files")->required()->expected(-1);
  dataset->add_option("--out", out_path, "Merged CSV output")->required();
  dataset->add_flag("--strict-csv", strict, "Fail on malformed rows instead of skipping");

  auto* train = app.add_subcommand(
      "train", "Label, cross-validate the classifiers, and train the regressor");
  train->add_option("--dataset", dataset_path, "Metrics CSV with labeled columns")
      ->required();
  train->add_option("--report", report_path, "Report text output path")->required();
  train->add_option("--out-dir", artifact_dir, "Model artifact directory");
  train->add_option("--runs", runs, "Repeated CV runs");
  train->add_option("--folds", folds, "CV folds");
  train->add_option("--tolerance", tolerance, "Relative tolerance for regression accuracy");
  train->add_flag("--strict-csv", strict, "Fail on malformed rows instead of skipping");
  add_common(train, false);

  auto* fairness = app.add_subcommand(
      "fairness", "Compare bbr, coupled, and coupled_ml on one scenario");
  fairness->add_option("--config", config_path, "Scenario JSON (default built in)");
  fairness->add_option("--out", out_path, "Fairness report CSV")->required();
  add_common(fairness, true);

  auto* plot = app.add_subcommand("plot", "Render a plot-data CSV as an SVG chart");
  plot->add_option("--input", plot_input, "Plot-data CSV")->required();
  plot->add_option("--out", out_path, "SVG output path")->required();
  plot->add_option("--title", plot_title, "Chart title");

  CLI11_PARSE(app, argc, argv);

  try {
    for (CLI::App* cmd : {simulate, sweep, train, fairness}) {
      if (cmd->parsed() && cmd->count("--seed") > 0) overrides.seed = seed;
    }
    if (simulate->parsed()) return cmd_simulate(config_path, out_path, overrides);
    if (sweep->parsed()) {
      std::optional<std::string> cfg;
      if (!config_path.empty()) cfg = config_path;
      return cmd_sweep(cfg, rates, buffers, out_path, jobs, svg, duration, overrides);
    }
    if (dataset->parsed()) return cmd_dataset(inputs, out_path, strict);
    if (train->parsed()) {
      return cmd_train(dataset_path, report_path, artifact_dir,
                       overrides.seed.value_or(1), runs, folds, tolerance, strict);
    }
    if (fairness->parsed()) {
      std::optional<std::string> cfg;
      if (!config_path.empty()) cfg = config_path;
      return cmd_fairness(cfg, out_path, overrides);
    }
    if (plot->parsed()) return cmd_plot(plot_input, out_path, plot_title);
    return kExitConfig;
  } catch (const SingleClassData& e) {
    log_error("degenerate data: {}", e.what());
    return kExitDegenerateData;
  } catch (const ParseError& e) {
    log_error("parse error: {}", e.what());
    return kExitConfig;
  } catch (const ConfigError& e) {
    log_error("config error: {}", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    log_error("invalid input: {}", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    log_error("i/o error: {}", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    log_error("unexpected error: {}", e.what());
    return kExitIo;
  }
}
