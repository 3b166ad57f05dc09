#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fewts/baselines.hpp"
#include "fewts/data.hpp"
#include "fewts/model.hpp"
#include "fewts/trainer.hpp"

namespace fewts {

/// Valid method ids: the proposed model, every meta/base combination, and
/// the persistence baseline.
const std::vector<std::string>& all_methods();
bool is_valid_method(const std::string& method);

struct SweepConfig {
  std::vector<std::size_t> train_task_counts;
  std::vector<std::size_t> test_support_sizes;
};

struct ExperimentConfig {
  std::filesystem::path dataset_root;  // raw archive (prepare only)
  std::filesystem::path prepared_dir;
  std::filesystem::path output_dir;
  std::vector<std::string> methods = {"ours", "pre"};
  std::vector<std::uint64_t> seeds = {0};
  std::size_t n_support_test = 3;
  TrainConfig train;        // the proposed model; also fixes the episode
                            // sizes shared with MAML
  ModelConfig model;
  BaselineConfig baseline;  // base/seed filled per run

  void validate() const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  /// Accepts either a bare config file or a run manifest (the manifest's
  /// embedded config is extracted), so a recorded run can be replayed.
  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  std::uint64_t config_hash() const;

  SweepConfig sweep;
};

/// Seeded test evaluation: the support indices derive from (seed, task
/// name) only, so every method sees the identical support. The remaining
/// series are queries; returns the pooled RMSE over all query series and
/// positions t = 2..T.
double evaluate_task(Forecaster& forecaster, const SeriesSet& task, std::size_t n_support_test,
                     std::uint64_t seed);

struct RawResult {
  std::uint64_t seed = 0;
  std::string task;
  std::string method;
  double rmse = 0.0;
};

struct TimingRecord {
  std::uint64_t seed = 0;
  std::string method;
  std::string phase;  // "train" or "test"
  std::string task;   // empty for train
  double seconds = 0.0;
};

struct ResultTable {
  std::vector<std::string> methods;  // column order
  std::vector<std::string> tasks;    // row order
  std::vector<RawResult> raw;        // every (seed, task, method) cell

  /// Mean RMSE over seeds for one (task, method); NaN when absent.
  double cell(const std::string& task, const std::string& method) const;
  /// Arithmetic mean of a method's column over all listed tasks.
  double method_mean(const std::string& method) const;
  std::string to_csv() const;      // aggregated table + mean row
  std::string raw_to_csv() const;  // per-seed records
};

struct RunArtifacts {
  ResultTable table;
  std::vector<TimingRecord> timing;
  std::vector<std::uint64_t> failed_seeds;
};

/// The full protocol: per seed, split tasks, train the selected methods,
/// evaluate every target task, and write results.csv, results_raw.csv,
/// timing.csv, per-method history CSVs, checkpoints, and manifest.json
/// into output_dir. A failing seed is logged and skipped; rerunning the
/// manifest reproduces results.csv byte for byte.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// Sweep over the number of training tasks (retrains per count) or the
/// test support size (trains once, evaluates per size). Writes
/// sweep_<axis>.csv with rows axis_value, method, mean_rmse.
enum class SweepAxis { train_tasks, support_size };
std::filesystem::path sweep(const ExperimentConfig& cfg, SweepAxis axis);

/// Per-position forecasts of one task for plotting: rows
/// task, series, t, true, predicted. Returns the CSV text.
std::string emit_traces(Forecaster& forecaster, const SeriesSet& task,
                        const std::vector<std::size_t>& series_indices, std::size_t n_support_test,
                        std::uint64_t seed);

/// Renders results.csv (and timing.csv when present) from a run directory
/// as an aligned text report with methodology notes.
void write_report(const std::filesystem::path& run_dir, std::ostream& out);

}  // namespace fewts
