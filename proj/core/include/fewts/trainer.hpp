#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fewts/data.hpp"
#include "fewts/model.hpp"
#include "fewts/rng.hpp"

namespace fewts {

struct TrainConfig {
  std::size_t n_support = 3;
  std::size_t n_query = 47;
  double lr = 1e-3;
  double dropout = 0.1;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;          // epochs without improvement; 0 stops after one
  std::size_t episodes_per_epoch = 0; // 0 = number of training tasks
  double clip_norm = 5.0;             // global gradient-norm clip; 0 disables
  std::uint64_t seed = 0;
};

/// Uniform support/query sampling without replacement; the query set is
/// drawn from the task minus the support, so the two are disjoint.
Episode sample_episode(const SeriesSet& task, std::size_t n_support, std::size_t n_query, Rng& rng);

/// Mean over query series of the per-series mean squared next-step error,
/// with the support encoded once and shared across queries. A non-null
/// dropout rng enables head dropout (training); nullptr disables it.
Tensor episode_loss(const ModelParams& m, const Episode& ep, Rng* dropout_rng = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_clock_s = 0.0;  // cumulative since training start
};

struct TrainResult {
  ModelParams best;   // lowest validation loss
  ModelParams last;   // state at the final epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Episodic meta-training: each epoch samples one task uniformly per
/// episode, draws a support/query episode, and applies one Adam step on
/// the episode loss. Validation runs the same loss on one fixed, seeded
/// episode per validation task; the best parameters are retained and
/// training stops when `patience` epochs pass without improvement.
/// cfg.dropout overrides the model config's dropout rate for the run.
TrainResult train(const ModelConfig& model_cfg, const std::vector<SeriesSet>& train_tasks,
                  const std::vector<SeriesSet>& val_tasks, const TrainConfig& cfg);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

/// The fixed validation episodes train() evaluates each epoch (exposed for
/// tests): one per task, seeded by the task name, query size clamped to
/// what the task can hold.
std::vector<Episode> validation_episodes(const std::vector<SeriesSet>& val_tasks,
                                         const TrainConfig& cfg);

}  // namespace fewts
