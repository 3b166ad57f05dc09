#include "fewts/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "fewts/errors.hpp"
#include "fewts/optim.hpp"
#include "fewts/util.hpp"

namespace fewts {

Episode sample_episode(const SeriesSet& task, std::size_t n_support, std::size_t n_query,
                       Rng& rng) {
  if (n_support == 0) throw ConfigError("sample_episode: support size must be >= 1");
  const std::size_t n = task.series.size();
  if (n_support + n_query > n) {
    throw DataError("sample_episode: task '" + task.name + "' has " + std::to_string(n) +
                    " series, need " + std::to_string(n_support + n_query));
  }
  // One draw of N_S + N_Q distinct indices: the first N_S form the support,
  // the rest are the query set (drawn from the task minus the support).
  std::vector<std::size_t> pick = rng.sample_without_replacement(n, n_support + n_query);
  Episode ep;
  ep.task = task.name;
  for (std::size_t i = 0; i < n_support; ++i) ep.support.push_back(task.series[pick[i]]);
  for (std::size_t i = n_support; i < pick.size(); ++i) ep.query.push_back(task.series[pick[i]]);
  return ep;
}

Tensor episode_loss(const ModelParams& m, const Episode& ep, Rng* dropout_rng) {
  check_episode(ep);
  SupportContext ctx = build_support_context(m, ep.support);
  Tensor total;
  for (const auto& q : ep.query) {
    Tensor preds = forecast_series_graph(m, q, ctx, dropout_rng);
    Tensor targets = Tensor::from_vector(forecast_targets(m.config, q));
    Tensor l = mse(preds, targets);
    total = total.defined() ? total + l : l;
  }
  return mul(total, 1.0 / static_cast<double>(ep.query.size()));
}

std::vector<Episode> validation_episodes(const std::vector<SeriesSet>& val_tasks,
                                         const TrainConfig& cfg) {
  std::vector<Episode> out;
  out.reserve(val_tasks.size());
  for (const auto& task : val_tasks) {
    Rng rng(derive_seed(cfg.seed, "val-episode:" + task.name));
    const std::size_t max_q = task.series.size() - cfg.n_support;
    out.push_back(sample_episode(task, cfg.n_support, std::min(cfg.n_query, max_q), rng));
  }
  return out;
}

namespace {

double mean_validation_loss(const ModelParams& m, const std::vector<Episode>& episodes) {
  NoGradGuard no_grad;
  double acc = 0.0;
  for (const Episode& ep : episodes) acc += episode_loss(m, ep, nullptr).value();
  return acc / static_cast<double>(episodes.size());
}

}  // namespace

TrainResult train(const ModelConfig& model_cfg, const std::vector<SeriesSet>& train_tasks,
                  const std::vector<SeriesSet>& val_tasks, const TrainConfig& cfg) {
  if (train_tasks.empty()) throw ConfigError("train: no training tasks");
  if (val_tasks.empty()) throw ConfigError("train: no validation tasks");
  if (cfg.patience > cfg.max_epochs) {
    throw ConfigError("train: patience exceeds max epochs");
  }

  ModelConfig mc = model_cfg;
  mc.dropout = cfg.dropout;

  Rng init_rng(derive_seed(cfg.seed, "init"));
  Rng episode_rng(derive_seed(cfg.seed, "episodes"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));

  ModelParams model = ModelParams::init(mc, init_rng);
  Adam opt(model.parameters(), {.lr = cfg.lr});
  const std::vector<Episode> val_eps = validation_episodes(val_tasks, cfg);
  const std::size_t episodes_per_epoch =
      cfg.episodes_per_epoch ? cfg.episodes_per_epoch : train_tasks.size();

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_acc = 0.0;
    for (std::size_t i = 0; i < episodes_per_epoch; ++i) {
      const SeriesSet& task = train_tasks[episode_rng.below(train_tasks.size())];
      Episode ep = sample_episode(task, cfg.n_support, cfg.n_query, episode_rng);
      Tensor loss = episode_loss(model, ep, &dropout_rng);
      if (!std::isfinite(loss.value())) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", task '" + ep.task + "', episode " + std::to_string(i + 1));
      }
      train_acc += loss.value();
      opt.zero_grad();
      backward(loss);
      NamedParams params = opt.params();
      clip_global_norm(params, cfg.clip_norm);
      opt.step();
    }

    const double train_loss = train_acc / static_cast<double>(episodes_per_epoch);
    const double val_loss = mean_validation_loss(model, val_eps);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back({epoch, train_loss, val_loss, elapsed});

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      result.best = model.clone();
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    if (bad_epochs >= cfg.patience) break;
  }

  result.last = model.clone();
  if (!result.best_epoch) {  // every epoch was non-finite-free but never improved on +inf: impossible, but stay safe
    result.best = model.clone();
    result.best_epoch = result.history.size();
  }
  return result;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss,wall_clock_s\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + fmt_double(r.train_loss) + "," +
           fmt_double(r.val_loss) + "," + fmt_double(r.wall_clock_s) + "\n";
  }
  write_text_file(path, out);
}

}  // namespace fewts
