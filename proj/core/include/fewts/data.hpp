#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fewts/rng.hpp"

namespace fewts {

// Canonical task dimensions after preparation.
inline constexpr std::size_t kSeriesPerTask = 50;
inline constexpr std::size_t kSeriesLength = 100;

// A task as parsed from the archive: class labels dropped, values kept
// verbatim (missing values stay NaN until filtering).
struct RawTask {
  std::string name;
  std::vector<std::vector<double>> series;
  std::filesystem::path provenance;
};

struct NormRecord {
  double mean = 0.0;
  double stddev = 1.0;
};

// A prepared task: exactly 50 series of 100 values, normalized to pooled
// mean 0 / variance 1 with the applied record retained.
struct SeriesSet {
  std::string name;
  std::vector<std::vector<double>> series;
  NormRecord norm;

  /// Enforces 50 x 100 finite values and pooled mean 0 / variance 1
  /// within 1e-9.
  void check() const;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> target;
  std::uint64_t seed = 0;
};

/// Parses one archive file: delimiter-separated rows (tab or comma), first
/// column a class label that is dropped. "NaN" tokens become quiet NaNs.
/// Errors carry the 1-based line number.
std::vector<std::vector<double>> load_task_file(const std::filesystem::path& path);

/// Loads <root>/<name>/<name>_TRAIN.tsv and _TEST.tsv pooled into one task.
RawTask load_archive_task(const std::filesystem::path& root, const std::string& name);

/// Subdirectories of `root` that contain both archive files, sorted by name.
std::vector<std::string> list_archive_tasks(const std::filesystem::path& root);

/// Keep criteria: no missing values, every series at least 100 long, and
/// at least 50 series (TRAIN and TEST pooled).
bool task_passes_filter(const RawTask& task);
std::vector<RawTask> filter_tasks(std::vector<RawTask> tasks);

/// Truncate to the first 100 values, subsample 50 series without
/// replacement (seed derived from `seed` and the task name), normalize by
/// the pooled mean/std of the kept 50 x 100 values. A zero-variance task is
/// a DataError.
SeriesSet prepare_task(const RawTask& task, std::uint64_t seed);

/// Seeded shuffle then 55/10/25 partition; requires exactly 90 names.
Split split_tasks(const std::vector<std::string>& names, std::uint64_t seed);

/// Proportional variant for reduced task lists: train = floor(n*55/90),
/// val = max(1, floor(n*10/90)), target = rest. Requires n >= 3.
Split split_tasks_scaled(const std::vector<std::string>& names, std::uint64_t seed);

// --- prepared-dataset directory ------------------------------------------
// One CSV per task (50 rows x 100 columns, full precision) plus
// manifest.json recording the preparation seed, per-task normalization
// records, and content checksums that are verified on load.

void write_prepared_dir(const std::filesystem::path& dir, const std::vector<SeriesSet>& tasks,
                        std::uint64_t seed);
std::vector<std::string> list_prepared_tasks(const std::filesystem::path& dir);
SeriesSet load_prepared_task(const std::filesystem::path& dir, const std::string& name);
std::vector<SeriesSet> load_prepared_dir(const std::filesystem::path& dir);
std::uint64_t prepared_dir_seed(const std::filesystem::path& dir);

}  // namespace fewts
