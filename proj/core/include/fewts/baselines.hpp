#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fewts/data.hpp"
#include "fewts/model.hpp"
#include "fewts/trainer.hpp"

namespace fewts {

// Base architectures for the comparison methods. All map a scalar history
// to the next value; NN and Linear see only the previous value (lag 1).
enum class BaseKind { lstm, nn, linear };

std::string base_kind_name(BaseKind kind);
BaseKind base_kind_from_name(const std::string& name);

struct BaselineConfig {
  BaseKind base = BaseKind::lstm;
  std::size_t hidden = 32;       // LSTM cell width and hidden-layer width
  double lr = 1e-3;
  double inner_lr = 1e-3;        // adaptation rate (MAML); 0 disables adaptation
  std::size_t inner_epochs = 5;  // adaptation epochs (MAML)
  std::size_t inner_batch = 0;   // support series per inner step; 0 = full batch
  std::size_t ds_epochs = 500;   // support-fit budget (DS, gradient bases)
  std::size_t max_epochs = 500;  // outer loop (DI, MAML)
  std::size_t patience = 20;
  std::size_t n_support = 3;     // episode sizes (MAML)
  std::size_t n_query = 47;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
};

struct BaseParams {
  BaseKind kind = BaseKind::lstm;
  std::size_t hidden = 0;
  // Populated per kind: lstm uses cell+head, nn uses head only (input = the
  // previous value), linear uses the two scalars.
  LstmParams cell;
  HeadParams head;
  Tensor lin_w, lin_b;

  static BaseParams init(BaseKind kind, std::size_t hidden, Rng& rng);
  NamedParams parameters() const;
  BaseParams clone() const;

  void save(const std::filesystem::path& path) const;
  static BaseParams load(const std::filesystem::path& path);
};

/// Next-step predictions for t = 2..T as one rank-1 graph tensor [T-1].
Tensor base_forecast_graph(const BaseParams& p, std::span<const double> series);
/// Evaluation path: values only, no gradient recording.
std::vector<double> base_forecast(const BaseParams& p, std::span<const double> series);
/// MSE of base_forecast_graph against x_2..x_T.
Tensor base_series_loss(const BaseParams& p, std::span<const double> series);
/// Mean of base_series_loss over the given series.
Tensor base_set_loss(const BaseParams& p, const std::vector<std::vector<double>>& series);

/// The persistence baseline: prediction at t is x_{t-1}, for t = 2..T.
std::vector<double> pre_predict(std::span<const double> series);

struct BaselineTrainResult {
  BaseParams best;
  BaseParams last;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  // MAML only: the post-adaptation query loss of every training episode,
  // in sampling order.
  std::vector<double> episode_query_losses;
};

/// Data-idiomatic training: minimizes pooled next-step MSE over every
/// training series (one Adam step per series, deterministic pass order),
/// early-stopped on the pooled validation loss. No support use at test.
BaselineTrainResult train_di(const std::vector<SeriesSet>& train_tasks,
                             const std::vector<SeriesSet>& val_tasks, const BaselineConfig& cfg);

/// Data-scarce training: fits a fresh model on the support alone. Gradient
/// bases run `ds_epochs` full-batch Adam steps; the linear base is solved
/// in closed form (ordinary least squares on lag-1 pairs).
BaseParams train_ds(const std::vector<std::vector<double>>& support, const BaselineConfig& cfg);

/// First-order MAML: per episode, adapt a clone of the initial parameters
/// with `inner_epochs` Adam epochs on the support (fresh inner optimizer
/// state per episode), then apply the query-loss gradient at the adapted
/// parameters to the initial ones (first-order approximation; no
/// second-order terms). Outer Adam, early stopping as in train().
BaselineTrainResult train_maml(const std::vector<SeriesSet>& train_tasks,
                               const std::vector<SeriesSet>& val_tasks,
                               const BaselineConfig& cfg);

/// The same inner finetune applied at test time.
BaseParams maml_adapt(const BaseParams& initial, const std::vector<std::vector<double>>& support,
                      const BaselineConfig& cfg);

// Uniform evaluation interface: fit whatever the method fits from the test
// support, then forecast query series.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  virtual void prepare(const std::vector<std::vector<double>>& support) = 0;
  /// Predictions aligned to t = 2..T (length T-1).
  virtual std::vector<double> predict_series(std::span<const double> series) const = 0;
};

std::unique_ptr<Forecaster> make_pre_forecaster();
std::unique_ptr<Forecaster> make_ours_forecaster(ModelParams trained);
std::unique_ptr<Forecaster> make_di_forecaster(std::string name, BaseParams trained);
/// Fits fresh parameters per prepare() call; cfg.seed controls the init.
std::unique_ptr<Forecaster> make_ds_forecaster(std::string name, BaselineConfig cfg);
std::unique_ptr<Forecaster> make_maml_forecaster(std::string name, BaseParams initial,
                                                 BaselineConfig cfg);

}  // namespace fewts
