#include "fewts/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "fewts/errors.hpp"
#include "fewts/optim.hpp"
#include "fewts/serialize.hpp"
#include "json.hpp"

namespace fewts {

using nlohmann::json;

std::string base_kind_name(BaseKind kind) {
  switch (kind) {
    case BaseKind::lstm: return "lstm";
    case BaseKind::nn: return "nn";
    case BaseKind::linear: return "linear";
  }
  throw ConfigError("unknown base kind");
}

BaseKind base_kind_from_name(const std::string& name) {
  if (name == "lstm") return BaseKind::lstm;
  if (name == "nn") return BaseKind::nn;
  if (name == "linear") return BaseKind::linear;
  throw ConfigError("unknown base model '" + name + "' (expected lstm, nn, or linear)");
}

BaseParams BaseParams::init(BaseKind kind, std::size_t hidden, Rng& rng) {
  BaseParams p;
  p.kind = kind;
  p.hidden = hidden;
  switch (kind) {
    case BaseKind::lstm:
      p.cell = LstmParams::init(hidden, 1, rng);
      p.head = HeadParams::init(hidden, hidden, rng);
      break;
    case BaseKind::nn:
      p.head = HeadParams::init(1, hidden, rng);
      break;
    case BaseKind::linear: {
      const double b = 1.0;
      p.lin_w = Tensor::uniform({}, -b, b, rng);
      p.lin_b = Tensor::zeros({}, /*requires_grad=*/true);
      break;
    }
  }
  return p;
}

NamedParams BaseParams::parameters() const {
  NamedParams out;
  switch (kind) {
    case BaseKind::lstm:
      cell.append_params(out, "cell");
      head.append_params(out, "head");
      break;
    case BaseKind::nn:
      head.append_params(out, "head");
      break;
    case BaseKind::linear:
      out.push_back({"lin.w", lin_w});
      out.push_back({"lin.b", lin_b});
      break;
  }
  return out;
}

BaseParams BaseParams::clone() const {
  BaseParams c;
  c.kind = kind;
  c.hidden = hidden;
  switch (kind) {
    case BaseKind::lstm:
      c.cell = {cell.w_ih.clone_detached(), cell.w_hh.clone_detached(), cell.b.clone_detached()};
      c.head = {head.w1.clone_detached(), head.b1.clone_detached(), head.w2.clone_detached(),
                head.b2.clone_detached(), head.w3.clone_detached(), head.b3.clone_detached()};
      break;
    case BaseKind::nn:
      c.head = {head.w1.clone_detached(), head.b1.clone_detached(), head.w2.clone_detached(),
                head.b2.clone_detached(), head.w3.clone_detached(), head.b3.clone_detached()};
      break;
    case BaseKind::linear:
      c.lin_w = lin_w.clone_detached();
      c.lin_b = lin_b.clone_detached();
      break;
  }
  return c;
}

void BaseParams::save(const std::filesystem::path& path) const {
  json cfg;
  cfg["kind"] = base_kind_name(kind);
  cfg["hidden"] = hidden;
  save_params_file(path, "base-model", parameters(), cfg.dump());
}

BaseParams BaseParams::load(const std::filesystem::path& path) {
  LoadedParams lp = load_params_file(path, "base-model");
  json cfg;
  try {
    cfg = json::parse(lp.config_json);
  } catch (const json::exception& e) {
    throw DataError("base-model config: " + std::string(e.what()));
  }
  Rng scratch(0);
  BaseParams p = BaseParams::init(base_kind_from_name(cfg.at("kind").get<std::string>()),
                                  cfg.at("hidden").get<std::size_t>(), scratch);
  NamedParams target = p.parameters();
  assign_params(target, lp.params);
  return p;
}

Tensor base_forecast_graph(const BaseParams& p, std::span<const double> series) {
  if (series.size() < 2) throw DataError("base forecast: series shorter than 2");
  const std::span<const double> inputs = series.subspan(0, series.size() - 1);
  switch (p.kind) {
    case BaseKind::lstm: {
      std::vector<Tensor> hs = encode_forward(p.cell, inputs);
      std::vector<Tensor> preds;
      preds.reserve(hs.size());
      for (const Tensor& h : hs) preds.push_back(head_forward(p.head, h, 0.0, nullptr));
      return concat(preds, 0);
    }
    case BaseKind::nn: {
      std::vector<Tensor> preds;
      preds.reserve(inputs.size());
      for (double x : inputs) {
        preds.push_back(head_forward(p.head, Tensor::from_vector({x}), 0.0, nullptr));
      }
      return concat(preds, 0);
    }
    case BaseKind::linear: {
      Tensor x = Tensor::from_vector(std::vector<double>(inputs.begin(), inputs.end()));
      return add(mul(x, p.lin_w), p.lin_b);
    }
  }
  throw ConfigError("unknown base kind");
}

std::vector<double> base_forecast(const BaseParams& p, std::span<const double> series) {
  NoGradGuard no_grad;
  Tensor preds = base_forecast_graph(p, series);
  return std::vector<double>(preds.data().begin(), preds.data().end());
}

Tensor base_series_loss(const BaseParams& p, std::span<const double> series) {
  Tensor preds = base_forecast_graph(p, series);
  Tensor targets = Tensor::from_vector(std::vector<double>(series.begin() + 1, series.end()));
  return mse(preds, targets);
}

Tensor base_set_loss(const BaseParams& p, const std::vector<std::vector<double>>& series) {
  if (series.empty()) throw DataError("base loss: empty series set");
  Tensor total;
  for (const auto& s : series) {
    Tensor l = base_series_loss(p, s);
    total = total.defined() ? total + l : l;
  }
  return mul(total, 1.0 / static_cast<double>(series.size()));
}

std::vector<double> pre_predict(std::span<const double> series) {
  if (series.size() < 2) throw DataError("pre: series shorter than 2");
  return std::vector<double>(series.begin(), series.end() - 1);
}

// --- DI ----------------------------------------------------------------------

namespace {

double pooled_validation_loss(const BaseParams& p, const std::vector<SeriesSet>& val_tasks) {
  NoGradGuard no_grad;
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& task : val_tasks) {
    for (const auto& s : task.series) {
      acc += base_series_loss(p, s).value();
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

}  // namespace

BaselineTrainResult train_di(const std::vector<SeriesSet>& train_tasks,
                             const std::vector<SeriesSet>& val_tasks, const BaselineConfig& cfg) {
  if (train_tasks.empty()) throw ConfigError("train_di: no training tasks");
  if (val_tasks.empty()) throw ConfigError("train_di: no validation tasks");

  Rng init_rng(derive_seed(cfg.seed, "init"));
  BaseParams params = BaseParams::init(cfg.base, cfg.hidden, init_rng);
  Adam opt(params.parameters(), {.lr = cfg.lr});

  BaselineTrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_acc = 0.0;
    std::size_t steps = 0;
    for (const auto& task : train_tasks) {
      for (const auto& s : task.series) {
        Tensor loss = base_series_loss(params, s);
        if (!std::isfinite(loss.value())) {
          throw NumericError("train_di: non-finite loss at epoch " + std::to_string(epoch) +
                             ", task '" + task.name + "'");
        }
        train_acc += loss.value();
        ++steps;
        opt.zero_grad();
        backward(loss);
        NamedParams view = params.parameters();
        clip_global_norm(view, cfg.clip_norm);
        opt.step();
      }
    }

    const double train_loss = train_acc / static_cast<double>(steps);
    const double val_loss = pooled_validation_loss(params, val_tasks);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back({epoch, train_loss, val_loss, elapsed});

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      result.best = params.clone();
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    if (bad_epochs >= cfg.patience) break;
  }

  result.last = params.clone();
  return result;
}

// --- DS ----------------------------------------------------------------------

namespace {

// Ordinary least squares on pooled (x_{t-1}, x_t) pairs. A support with no
// lag-1 variance gets slope 0 and predicts the mean target.
BaseParams fit_linear_ls(const std::vector<std::vector<double>>& support) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& s : support) {
    for (std::size_t t = 1; t < s.size(); ++t) {
      const double x = s[t - 1], y = s[t];
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  }
  if (n == 0) throw DataError("linear fit: no lag-1 pairs in support");
  const double nd = static_cast<double>(n);
  const double var = sxx - sx * sx / nd;
  const double cov = sxy - sx * sy / nd;
  const double w = (var > 0.0) ? cov / var : 0.0;
  const double b = (sy - w * sx) / nd;
  BaseParams p;
  p.kind = BaseKind::linear;
  p.hidden = 0;
  p.lin_w = Tensor::scalar(w, /*requires_grad=*/true);
  p.lin_b = Tensor::scalar(b, /*requires_grad=*/true);
  return p;
}

}  // namespace

BaseParams train_ds(const std::vector<std::vector<double>>& support, const BaselineConfig& cfg) {
  if (support.empty()) throw DataError("train_ds: empty support");
  for (const auto& s : support) {
    if (s.size() < 2) throw DataError("train_ds: support series shorter than 2");
  }
  if (cfg.base == BaseKind::linear) return fit_linear_ls(support);

  Rng init_rng(derive_seed(cfg.seed, "ds-init"));
  BaseParams params = BaseParams::init(cfg.base, cfg.hidden, init_rng);
  Adam opt(params.parameters(), {.lr = cfg.lr});
  for (std::size_t epoch = 1; epoch <= cfg.ds_epochs; ++epoch) {
    Tensor loss = base_set_loss(params, support);
    if (!std::isfinite(loss.value())) {
      throw NumericError("train_ds: non-finite loss at epoch " + std::to_string(epoch));
    }
    opt.zero_grad();
    backward(loss);
    NamedParams view = params.parameters();
    clip_global_norm(view, cfg.clip_norm);
    opt.step();
  }
  return params;
}

// --- MAML ----------------------------------------------------------------------

namespace {

// The shared inner loop: clone, then `inner_epochs` Adam epochs on the
// support loss. inner_batch = 0 takes one full-batch step per epoch;
// otherwise each epoch walks the support in chunks of inner_batch series.
BaseParams inner_finetune(const BaseParams& initial,
                          const std::vector<std::vector<double>>& support,
                          const BaselineConfig& cfg) {
  BaseParams adapted = initial.clone();
  Adam inner_opt(adapted.parameters(), {.lr = cfg.inner_lr});
  for (std::size_t epoch = 1; epoch <= cfg.inner_epochs; ++epoch) {
    std::size_t start = 0;
    const std::size_t batch = cfg.inner_batch ? cfg.inner_batch : support.size();
    while (start < support.size()) {
      const std::size_t end = std::min(start + batch, support.size());
      std::vector<std::vector<double>> chunk(support.begin() + start, support.begin() + end);
      Tensor loss = base_set_loss(adapted, chunk);
      if (!std::isfinite(loss.value())) {
        throw NumericError("maml inner loop: non-finite loss at inner epoch " +
                           std::to_string(epoch));
      }
      inner_opt.zero_grad();
      backward(loss);
      NamedParams view = adapted.parameters();
      clip_global_norm(view, cfg.clip_norm);
      inner_opt.step();
      start = end;
    }
  }
  return adapted;
}

double maml_validation_loss(const BaseParams& initial, const std::vector<Episode>& val_eps,
                            const BaselineConfig& cfg) {
  double acc = 0.0;
  for (const Episode& ep : val_eps) {
    BaseParams adapted = inner_finetune(initial, ep.support, cfg);
    NoGradGuard no_grad;
    acc += base_set_loss(adapted, ep.query).value();
  }
  return acc / static_cast<double>(val_eps.size());
}

}  // namespace

BaseParams maml_adapt(const BaseParams& initial, const std::vector<std::vector<double>>& support,
                      const BaselineConfig& cfg) {
  if (support.empty()) throw DataError("maml_adapt: empty support");
  return inner_finetune(initial, support, cfg);
}

BaselineTrainResult train_maml(const std::vector<SeriesSet>& train_tasks,
                               const std::vector<SeriesSet>& val_tasks,
                               const BaselineConfig& cfg) {
  if (train_tasks.empty()) throw ConfigError("train_maml: no training tasks");
  if (val_tasks.empty()) throw ConfigError("train_maml: no validation tasks");

  Rng init_rng(derive_seed(cfg.seed, "init"));
  Rng episode_rng(derive_seed(cfg.seed, "episodes"));
  BaseParams initial = BaseParams::init(cfg.base, cfg.hidden, init_rng);
  Adam outer_opt(initial.parameters(), {.lr = cfg.lr});

  std::vector<Episode> val_eps;
  for (const auto& task : val_tasks) {
    Rng rng(derive_seed(cfg.seed, "val-episode:" + task.name));
    const std::size_t max_q = task.series.size() - cfg.n_support;
    val_eps.push_back(sample_episode(task, cfg.n_support, std::min(cfg.n_query, max_q), rng));
  }

  BaselineTrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;
  const std::size_t episodes_per_epoch = train_tasks.size();
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_acc = 0.0;
    for (std::size_t i = 0; i < episodes_per_epoch; ++i) {
      const SeriesSet& task = train_tasks[episode_rng.below(train_tasks.size())];
      Episode ep = sample_episode(task, cfg.n_support, cfg.n_query, episode_rng);

      BaseParams adapted = inner_finetune(initial, ep.support, cfg);
      Tensor query_loss = base_set_loss(adapted, ep.query);
      if (!std::isfinite(query_loss.value())) {
        throw NumericError("train_maml: non-finite query loss at epoch " + std::to_string(epoch) +
                           ", task '" + ep.task + "', episode " + std::to_string(i + 1));
      }
      train_acc += query_loss.value();
      result.episode_query_losses.push_back(query_loss.value());

      // First-order update: the query-loss gradient at the adapted
      // parameters is applied to the initial parameters directly.
      NamedParams adapted_view = adapted.parameters();
      for (auto& p : adapted_view) p.tensor.zero_grad();
      backward(query_loss);
      clip_global_norm(adapted_view, cfg.clip_norm);

      outer_opt.zero_grad();
      NamedParams initial_view = initial.parameters();
      for (std::size_t k = 0; k < initial_view.size(); ++k) {
        initial_view[k].tensor.ensure_grad();
        const auto src = adapted_view[k].tensor.grad();
        auto dst = initial_view[k].tensor.grad_mut();
        std::copy(src.begin(), src.end(), dst.begin());
      }
      outer_opt.step();
    }

    const double train_loss = train_acc / static_cast<double>(episodes_per_epoch);
    const double val_loss = maml_validation_loss(initial, val_eps, cfg);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back({epoch, train_loss, val_loss, elapsed});

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      result.best = initial.clone();
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    if (bad_epochs >= cfg.patience) break;
  }

  result.last = initial.clone();
  return result;
}

// --- Forecasters ----------------------------------------------------------------

namespace {

class PreForecaster final : public Forecaster {
 public:
  std::string name() const override { return "pre"; }
  void prepare(const std::vector<std::vector<double>>&) override {}
  std::vector<double> predict_series(std::span<const double> series) const override {
    return pre_predict(series);
  }
};

class OursForecaster final : public Forecaster {
 public:
  explicit OursForecaster(ModelParams m) : model_(std::move(m)) {}
  std::string name() const override { return "ours"; }
  void prepare(const std::vector<std::vector<double>>& support) override {
    NoGradGuard no_grad;
    ctx_ = build_support_context(model_, support);
    ready_ = true;
  }
  std::vector<double> predict_series(std::span<const double> series) const override {
    if (!ready_) throw ConfigError("forecaster 'ours': prepare() not called");
    std::vector<double> preds = forecast_series(model_, series, ctx_);
    // Evaluation is aligned to t = 2..T; drop the optional t=1 output.
    if (model_.config.include_t1) preds.erase(preds.begin());
    return preds;
  }

 private:
  ModelParams model_;
  SupportContext ctx_;
  bool ready_ = false;
};

class DiForecaster final : public Forecaster {
 public:
  DiForecaster(std::string name, BaseParams params)
      : name_(std::move(name)), params_(std::move(params)) {}
  std::string name() const override { return name_; }
  void prepare(const std::vector<std::vector<double>>&) override {}  // support unused
  std::vector<double> predict_series(std::span<const double> series) const override {
    return base_forecast(params_, series);
  }

 private:
  std::string name_;
  BaseParams params_;
};

class DsForecaster final : public Forecaster {
 public:
  DsForecaster(std::string name, BaselineConfig cfg) : name_(std::move(name)), cfg_(cfg) {}
  std::string name() const override { return name_; }
  void prepare(const std::vector<std::vector<double>>& support) override {
    params_ = train_ds(support, cfg_);
    ready_ = true;
  }
  std::vector<double> predict_series(std::span<const double> series) const override {
    if (!ready_) throw ConfigError("forecaster '" + name_ + "': prepare() not called");
    return base_forecast(params_, series);
  }

 private:
  std::string name_;
  BaselineConfig cfg_;
  BaseParams params_;
  bool ready_ = false;
};

class MamlForecaster final : public Forecaster {
 public:
  MamlForecaster(std::string name, BaseParams initial, BaselineConfig cfg)
      : name_(std::move(name)), initial_(std::move(initial)), cfg_(cfg) {}
  std::string name() const override { return name_; }
  void prepare(const std::vector<std::vector<double>>& support) override {
    adapted_ = maml_adapt(initial_, support, cfg_);
    ready_ = true;
  }
  std::vector<double> predict_series(std::span<const double> series) const override {
    if (!ready_) throw ConfigError("forecaster '" + name_ + "': prepare() not called");
    return base_forecast(adapted_, series);
  }

 private:
  std::string name_;
  BaseParams initial_;
  BaselineConfig cfg_;
  BaseParams adapted_;
  bool ready_ = false;
};

}  // namespace

std::unique_ptr<Forecaster> make_pre_forecaster() { return std::make_unique<PreForecaster>(); }

std::unique_ptr<Forecaster> make_ours_forecaster(ModelParams trained) {
  return std::make_unique<OursForecaster>(std::move(trained));
}

std::unique_ptr<Forecaster> make_di_forecaster(std::string name, BaseParams trained) {
  return std::make_unique<DiForecaster>(std::move(name), std::move(trained));
}

std::unique_ptr<Forecaster> make_ds_forecaster(std::string name, BaselineConfig cfg) {
  return std::make_unique<DsForecaster>(std::move(name), cfg);
}

std::unique_ptr<Forecaster> make_maml_forecaster(std::string name, BaseParams initial,
                                                 BaselineConfig cfg) {
  return std::make_unique<MamlForecaster>(std::move(name), std::move(initial), cfg);
}

}  // namespace fewts
