#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "fairbbr/csv.hpp"
#include "fairbbr/fairness.hpp"
#include "fairbbr/metrics.hpp"
#include "fairbbr/ml/artifact.hpp"
#include "fairbbr/ml/cross_validate.hpp"
#include "fairbbr/ml/data.hpp"
#include "fairbbr/ml/evaluate.hpp"
#include "fairbbr/ml/mlp.hpp"
#include "fairbbr/sim.hpp"

namespace fairbbr::exp {

// Spearman rank correlation with average ranks on ties.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size(), 0.0);
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  double mx = ml::mean_of(rx);
  double my = ml::mean_of(ry);
  double cov = 0, vx = 0, vy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0 || vy == 0) return 0;
  return cov / std::sqrt(vx * vy);
}

// Default single-flow scenario: a 1 Mbit/s bottleneck (100 msg/s at
// 1250-byte messages), 200 ms round-trip propagation, Poisson offers.
inline SimConfig default_scenario(double send_rate_mps = 100, int buffer_packets = 50,
                                  uint64_t seed = 1, double duration_s = 60) {
  SimConfig cfg;
  cfg.duration_s = duration_s;
  cfg.seed = seed;
  cfg.links.push_back({"L1", 1e6, 0.1, buffer_packets});
  FlowConfig f;
  f.id = "A";
  f.path = {"L1"};
  f.send_rate_mps = send_rate_mps;
  cfg.flows.push_back(f);
  return cfg;
}

// Two identical subflows through one bottleneck; the second starts 2 s
// later, which is enough asymmetry for plain BBR to settle unfairly.
inline SimConfig default_fairness_scenario(uint64_t seed = 1, double duration_s = 60) {
  SimConfig cfg = default_scenario(100, 50, seed, duration_s);
  cfg.flows[0].id = "A";
  FlowConfig b = cfg.flows[0];
  b.id = "B";
  b.start_s = 2.0;
  cfg.flows.push_back(b);
  return cfg;
}

struct SweepSpec {
  std::vector<double> send_rates;
  std::vector<int> buffer_sizes;
};

inline SweepSpec default_sweep() {
  SweepSpec s;
  for (double r = 20; r <= 200; r += 20) s.send_rates.push_back(r);
  s.buffer_sizes = {10, 50, 100};
  return s;
}

struct CellSummary {
  double send_rate = 0;
  int buffer = 0;
  std::vector<MetricsRow> rows;
  RunStats stats;
  // Mean of per-window average latencies over windows with deliveries.
  std::optional<double> mean_latency_s;
  // Mean of per-window delivered message rates.
  double throughput_mps = 0;
};

inline SimConfig cell_config(const SimConfig& base, double send_rate, int buffer) {
  SimConfig cfg = base;
  for (auto& l : cfg.links) l.buffer_packets = buffer;
  for (auto& f : cfg.flows) f.send_rate_mps = send_rate;
  return cfg;
}

inline CellSummary run_cell(const SimConfig& cfg, double send_rate, int buffer) {
  Simulator sim(cfg);
  CellSummary cell;
  cell.send_rate = send_rate;
  cell.buffer = buffer;
  cell.stats = sim.run();
  cell.rows = sim.metrics_rows();
  double lat_sum = 0;
  int lat_n = 0;
  double thr_sum = 0;
  int thr_n = 0;
  for (const auto& row : cell.rows) {
    if (row.avg_latency.has_value()) {
      lat_sum += *row.avg_latency;
      ++lat_n;
    }
    thr_sum += row.throughput;
    ++thr_n;
  }
  if (lat_n > 0) cell.mean_latency_s = lat_sum / lat_n;
  if (thr_n > 0) cell.throughput_mps = thr_sum / thr_n;
  return cell;
}

struct SweepResult {
  std::vector<CellSummary> cells;  // successful cells, ordered by (send_rate, buffer)
  std::vector<std::string> failures;  // one message per failed cell

  const CellSummary* find(double rate, int buffer) const {
    for (const auto& c : cells) {
      if (c.send_rate == rate && c.buffer == buffer) return &c;
    }
    return nullptr;
  }

  std::vector<MetricsRow> all_rows() const {
    std::vector<MetricsRow> rows;
    for (const auto& c : cells) rows.insert(rows.end(), c.rows.begin(), c.rows.end());
    return rows;
  }
};

// Runs the cross product; cells are independent seeded runs, so any jobs
// schedule produces identical results. A failing cell is reported, not
// fatal: the other cells' results survive.
inline SweepResult run_sweep(const SimConfig& base, const SweepSpec& spec, int jobs = 1) {
  if (spec.send_rates.empty() || spec.buffer_sizes.empty()) {
    throw ConfigError("sweep needs at least one send rate and one buffer size");
  }
  struct Task {
    double rate;
    int buffer;
  };
  std::vector<Task> tasks;
  for (double r : spec.send_rates) {
    for (int b : spec.buffer_sizes) tasks.push_back({r, b});
  }
  std::vector<std::optional<CellSummary>> slots(tasks.size());
  std::vector<std::string> errors(tasks.size());

  jobs = std::max(1, jobs);
  std::vector<std::thread> workers;
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      try {
        slots[i] = run_cell(cell_config(base, tasks[i].rate, tasks[i].buffer),
                            tasks[i].rate, tasks[i].buffer);
      } catch (const std::exception& e) {
        errors[i] = fmt::format("cell rate={} buffer={}: {}", tasks[i].rate,
                                tasks[i].buffer, e.what());
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    for (int j = 0; j < jobs; ++j) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
  }

  SweepResult result;
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (slots[i].has_value()) {
      result.cells.push_back(std::move(*slots[i]));
    } else {
      result.failures.push_back(errors[i]);
    }
  }
  return result;
}

struct PlotTable {
  std::string name;  // file stem
  std::string x_label;
  std::vector<std::string> columns;  // x column first
  std::vector<std::vector<std::optional<double>>> rows;
};

inline void write_plot_table_csv(const std::string& path, const PlotTable& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  for (size_t c = 0; c < t.columns.size(); ++c) {
    f << t.columns[c] << (c + 1 < t.columns.size() ? "," : "\n");
  }
  for (const auto& row : t.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (row[c].has_value()) f << format_double(*row[c]);
      f << (c + 1 < row.size() ? "," : "\n");
    }
  }
  if (!f) throw IoError("write failed on '" + path + "'");
}

// Four aggregate views of a sweep: latency and throughput against send
// rate at the reference buffer, and both again split per buffer size.
inline std::vector<PlotTable> sweep_plot_tables(const SweepResult& sweep,
                                                const SweepSpec& spec) {
  int reference_buffer = spec.buffer_sizes.front();
  for (int b : spec.buffer_sizes) {
    if (b == 50) reference_buffer = 50;
  }

  PlotTable lat{"latency_vs_rate", "send_rate", {"send_rate", "avg_latency_s"}, {}};
  PlotTable thr{"throughput_vs_rate", "send_rate", {"send_rate", "throughput_mps"}, {}};
  PlotTable lat_b{"latency_by_buffer", "send_rate", {"send_rate"}, {}};
  PlotTable thr_b{"throughput_by_buffer", "send_rate", {"send_rate"}, {}};
  for (int b : spec.buffer_sizes) {
    lat_b.columns.push_back(fmt::format("buffer_{}", b));
    thr_b.columns.push_back(fmt::format("buffer_{}", b));
  }

  for (double rate : spec.send_rates) {
    const CellSummary* ref = sweep.find(rate, reference_buffer);
    if (ref != nullptr) {
      lat.rows.push_back({rate, ref->mean_latency_s});
      thr.rows.push_back({rate, ref->throughput_mps});
    }
    std::vector<std::optional<double>> lrow{rate};
    std::vector<std::optional<double>> trow{rate};
    for (int b : spec.buffer_sizes) {
      const CellSummary* cell = sweep.find(rate, b);
      lrow.push_back(cell != nullptr ? cell->mean_latency_s : std::nullopt);
      trow.push_back(cell != nullptr ? std::optional<double>(cell->throughput_mps)
                                     : std::nullopt);
    }
    lat_b.rows.push_back(std::move(lrow));
    thr_b.rows.push_back(std::move(trow));
  }
  return {lat, thr, lat_b, thr_b};
}

struct FairnessFlowResult {
  std::string flow_id;
  double throughput_bps = 0;
};

struct FairnessAlgoResult {
  CcAlgorithm algorithm = CcAlgorithm::Bbr;
  std::vector<FairnessFlowResult> flows;
  double jain = 0;
};

struct FairnessComparison {
  std::vector<FairnessAlgoResult> algorithms;  // bbr, coupled, coupled_ml
};

// Runs the same scenario and seed under all three algorithms. Throughput
// per flow and the Jain index are taken over the final third of the run.
inline FairnessComparison run_fairness_comparison(const SimConfig& base) {
  if (base.flows.size() < 2) {
    throw ConfigError("fairness comparison needs at least two subflows");
  }
  FairnessComparison out;
  for (CcAlgorithm algo :
       {CcAlgorithm::Bbr, CcAlgorithm::Coupled, CcAlgorithm::CoupledMl}) {
    SimConfig cfg = base;
    cfg.algorithm = algo;
    Simulator sim(cfg);
    if (algo != CcAlgorithm::Bbr && sim.grouping().sets.empty()) {
      throw ConfigError("no shared bottleneck: all subflows have disjoint bottlenecks");
    }
    sim.run();
    double from = 2.0 * cfg.duration_s / 3.0;
    auto thr = sim.flow_throughputs_mps(from, cfg.duration_s);
    FairnessAlgoResult r;
    r.algorithm = algo;
    for (size_t i = 0; i < cfg.flows.size(); ++i) {
      double bits = static_cast<double>(cfg.flows[i].message_bytes) * 8.0;
      r.flows.push_back({cfg.flows[i].id, thr[i] * bits});
    }
    std::vector<double> values;
    for (const auto& f : r.flows) values.push_back(f.throughput_bps);
    r.jain = jain_index(values);
    out.algorithms.push_back(std::move(r));
  }
  return out;
}

inline void write_fairness_csv(const std::string& path, const FairnessComparison& cmp,
                               uint64_t run_id) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "run_id,algorithm,flow_id,throughput_bps,jain_index\n";
  for (const auto& algo : cmp.algorithms) {
    for (const auto& flow : algo.flows) {
      f << run_id << ',' << to_string(algo.algorithm) << ',' << flow.flow_id << ','
        << format_double(flow.throughput_bps) << ',' << format_double(algo.jain) << '\n';
    }
  }
  if (!f) throw IoError("write failed on '" + path + "'");
}

struct TrainParams {
  int folds = 5;
  int num_runs = 10;
  double test_fraction = 0.25;
  double label_threshold_s = 1.0;
  double regression_tolerance = 0.10;
  ml::LinearSvm::Params svm{0.01, 40};
  ml::DecisionTree::Params tree{16, 2};
  int mlp_hidden = 16;
  double mlp_lr = 0.001;
  int mlp_epochs = 800;
  int regressor_hidden = 16;
  double regressor_lr = 0.01;
  int regressor_epochs = 1000;
};

struct TrainOutput {
  ml::RepeatedCvReport svm_cv;
  ml::RepeatedCvReport tree_cv;
  ml::RepeatedCvReport mlp_cv;
  std::vector<std::pair<int, double>> regressor_trace;
  double validation_accuracy = 0;
  double validation_mse = 0;
  ml::ModelArtifact svm_artifact;
  ml::ModelArtifact tree_artifact;
  ml::ModelArtifact mlp_artifact;
  ml::ModelArtifact regressor_artifact;

  // The report's line formats follow the reference training tool output.
  std::string report_text() const {
    std::string text;
    text += fmt::format("Mean SVM Accuracy: {}\n", svm_cv.mean);
    text += fmt::format("Mean Decision Tree Accuracy: {}\n", tree_cv.mean);
    text += fmt::format("Mean MLP Accuracy: {}\n", mlp_cv.mean);
    for (const auto& [epoch, loss] : regressor_trace) {
      text += fmt::format("Epoch {}, Loss: {}\n", epoch, loss);
    }
    text += fmt::format("Accuracy on Validation Set: {}\n", validation_accuracy);
    return text;
  }
};

// The full training pipeline over measurement rows: threshold labeling,
// standardization, repeated k-fold CV for the three classifiers, and the
// throughput regressor with its loss trace and held-out accuracy.
inline TrainOutput run_training(const std::vector<MetricsRow>& rows, uint64_t seed,
                                const TrainParams& params = {}) {
  Dataset dataset = dataset_from_rows(rows, params.label_threshold_s);
  if (dataset.rows.size() < static_cast<size_t>(params.folds)) {
    throw EmptyInput("too few labeled rows to train on");
  }
  ml::Matrix X = ml::feature_matrix(dataset);
  std::vector<int> y = ml::label_vector(dataset);
  bool has0 = false, has1 = false;
  for (int label : y) (label == 1 ? has1 : has0) = true;
  if (!has0 || !has1) {
    throw SingleClassData("labeling produced a single class; cannot train classifiers");
  }

  TrainOutput out;
  ml::ClassifierSpec svm_spec;
  svm_spec.kind = ml::ClassifierSpec::Kind::LinearSvm;
  svm_spec.svm = params.svm;
  ml::ClassifierSpec tree_spec;
  tree_spec.kind = ml::ClassifierSpec::Kind::DecisionTree;
  tree_spec.tree = params.tree;
  ml::ClassifierSpec mlp_spec;
  mlp_spec.kind = ml::ClassifierSpec::Kind::Mlp;
  mlp_spec.mlp_hidden = params.mlp_hidden;
  mlp_spec.mlp_lr = params.mlp_lr;
  mlp_spec.mlp_epochs = params.mlp_epochs;

  out.svm_cv = ml::repeated_cv_classifier(svm_spec, X, y, params.folds, seed,
                                          params.num_runs);
  out.tree_cv = ml::repeated_cv_classifier(tree_spec, X, y, params.folds, seed,
                                           params.num_runs);
  out.mlp_cv = ml::repeated_cv_classifier(mlp_spec, X, y, params.folds, seed,
                                          params.num_runs);

  // Final classifier artifacts trained on everything.
  auto to_artifact = [&](const ml::ClassifierSpec& spec, const char* kind,
                         const ml::RepeatedCvReport& cv) {
    auto trained = ml::train_classifier(spec, X, y, derive_seed(seed, {fnv1a64(kind)}));
    ml::ModelArtifact a;
    a.kind = kind;
    a.scaler = trained.scaler;
    a.model = std::move(trained.model);
    a.scores = {{"cv_mean_accuracy", cv.mean}, {"cv_std", cv.stddev}};
    return a;
  };
  out.svm_artifact = to_artifact(svm_spec, "linear_svm", out.svm_cv);
  out.svm_artifact.hyperparameters = {{"lambda", params.svm.lambda},
                                      {"epochs", params.svm.epochs}};
  out.tree_artifact = to_artifact(tree_spec, "decision_tree", out.tree_cv);
  out.tree_artifact.hyperparameters = {{"max_depth", params.tree.max_depth},
                                       {"min_samples_split", params.tree.min_samples_split}};
  out.mlp_artifact = to_artifact(mlp_spec, "mlp_classifier", out.mlp_cv);
  out.mlp_artifact.hyperparameters = {{"hidden", params.mlp_hidden},
                                      {"lr", params.mlp_lr},
                                      {"epochs", params.mlp_epochs}};

  // Regressor: (block_size, send_rate) -> throughput, standardized both
  // sides, full batch.
  ml::Matrix Xr(dataset.rows.size(), 2);
  std::vector<double> yr(dataset.rows.size());
  {
    size_t i = 0;
    for (const auto& row : rows) {
      if (!row.avg_latency.has_value()) continue;
      if (!std::isfinite(row.block_size) || !std::isfinite(row.throughput) ||
          !std::isfinite(*row.avg_latency)) {
        continue;
      }
      Xr.at(i, 0) = row.block_size;
      Xr.at(i, 1) = row.send_rate;
      yr[i] = row.throughput;
      ++i;
    }
  }
  auto split = ml::train_test_split(Xr.rows, params.test_fraction, seed);
  ml::Matrix Xr_train = Xr.select(split.train);
  ml::Matrix Xr_test = Xr.select(split.test);
  std::vector<double> y_train = ml::select(yr, split.train);
  std::vector<double> y_test = ml::select(yr, split.test);

  ml::Standardizer xr_scaler;
  xr_scaler.fit(Xr_train);
  ml::TargetScaler yr_scaler;
  yr_scaler.fit(y_train);
  std::vector<double> y_train_std(y_train.size());
  for (size_t i = 0; i < y_train.size(); ++i) y_train_std[i] = yr_scaler.transform(y_train[i]);

  auto reg = ml::fit_mlp_regressor(xr_scaler.transform(Xr_train), y_train_std,
                                   params.regressor_hidden, params.regressor_lr,
                                   params.regressor_epochs, seed);
  out.regressor_trace = reg.trace;

  out.regressor_artifact.kind = "mlp_regressor";
  out.regressor_artifact.scaler = xr_scaler;
  out.regressor_artifact.model = reg.model;
  out.regressor_artifact.trace = reg.trace;
  out.regressor_artifact.target_mean = yr_scaler.mean();
  out.regressor_artifact.target_std = yr_scaler.stddev();
  out.regressor_artifact.hyperparameters = {{"hidden", params.regressor_hidden},
                                            {"lr", params.regressor_lr},
                                            {"epochs", params.regressor_epochs}};

  std::vector<double> preds;
  preds.reserve(Xr_test.rows);
  for (size_t i = 0; i < Xr_test.rows; ++i) {
    preds.push_back(out.regressor_artifact.predict_value(Xr_test.row(i)));
  }
  auto scores = ml::evaluate_regression(preds, y_test, params.regression_tolerance);
  out.validation_accuracy = scores.tolerance_accuracy;
  out.validation_mse = scores.mse;
  out.regressor_artifact.scores = {{"validation_accuracy", scores.tolerance_accuracy},
                                   {"validation_mse", scores.mse}};
  return out;
}

}  // namespace fairbbr::exp
