#include "fewts/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "fewts/errors.hpp"
#include "fewts/util.hpp"
#include "json.hpp"

#if __has_include("fewts/version.hpp")
#include "fewts/version.hpp"
#else
#define FEWTS_VERSION "0.0.0-dev"
#endif

namespace fewts {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& all_methods() {
  static const std::vector<std::string> methods = {
      "ours",    "maml-lstm", "di-lstm",     "ds-lstm",   "maml-nn",   "di-nn",
      "ds-nn",   "maml-linear", "di-linear", "ds-linear", "pre"};
  return methods;
}

bool is_valid_method(const std::string& method) {
  const auto& all = all_methods();
  return std::find(all.begin(), all.end(), method) != all.end();
}

namespace {

// "ours" and "pre" stand alone; everything else is "<meta>-<base>".
void parse_method(const std::string& method, std::string& meta, std::string& base) {
  if (!is_valid_method(method)) {
    throw ConfigError("unknown method '" + method + "'");
  }
  if (method == "ours" || method == "pre") {
    meta = method;
    base.clear();
    return;
  }
  const std::size_t dash = method.find('-');
  meta = method.substr(0, dash);
  base = method.substr(dash + 1);
}

}  // namespace

// --- configuration -----------------------------------------------------------

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("config: no methods selected");
  for (const auto& m : methods) {
    if (!is_valid_method(m)) throw ConfigError("config: unknown method '" + m + "'");
  }
  if (seeds.empty()) throw ConfigError("config: no seeds");
  if (n_support_test == 0) throw ConfigError("config: n_support_test must be >= 1");
  if (train.n_support == 0) throw ConfigError("config: train.n_support must be >= 1");
}

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return key == k; }) == known.end()) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
    }
  }
}

json train_to_json(const TrainConfig& t) {
  json j;
  j["n_support"] = t.n_support;
  j["n_query"] = t.n_query;
  j["lr"] = t.lr;
  j["dropout"] = t.dropout;
  j["max_epochs"] = t.max_epochs;
  j["patience"] = t.patience;
  j["episodes_per_epoch"] = t.episodes_per_epoch;
  j["clip_norm"] = t.clip_norm;
  return j;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  reject_unknown_keys(j,
                      {"n_support", "n_query", "lr", "dropout", "max_epochs", "patience",
                       "episodes_per_epoch", "clip_norm"},
                      "train");
  read_field(j, "n_support", t.n_support);
  read_field(j, "n_query", t.n_query);
  read_field(j, "lr", t.lr);
  read_field(j, "dropout", t.dropout);
  read_field(j, "max_epochs", t.max_epochs);
  read_field(j, "patience", t.patience);
  read_field(j, "episodes_per_epoch", t.episodes_per_epoch);
  read_field(j, "clip_norm", t.clip_norm);
  return t;
}

json model_to_json(const ModelConfig& m) {
  return json::parse(m.to_json());
}

ModelConfig model_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"hidden_fwd", "hidden_bwd", "hidden_query", "k_a", "k_v", "head_hidden",
                       "dropout", "scale_scores", "include_t1"},
                      "model");
  ModelConfig m;
  read_field(j, "hidden_fwd", m.hidden_fwd);
  read_field(j, "hidden_bwd", m.hidden_bwd);
  read_field(j, "hidden_query", m.hidden_query);
  read_field(j, "k_a", m.k_a);
  read_field(j, "k_v", m.k_v);
  read_field(j, "head_hidden", m.head_hidden);
  read_field(j, "dropout", m.dropout);
  read_field(j, "scale_scores", m.scale_scores);
  read_field(j, "include_t1", m.include_t1);
  return m;
}

json baseline_to_json(const BaselineConfig& b) {
  json j;
  j["hidden"] = b.hidden;
  j["lr"] = b.lr;
  j["inner_lr"] = b.inner_lr;
  j["inner_epochs"] = b.inner_epochs;
  j["inner_batch"] = b.inner_batch;
  j["ds_epochs"] = b.ds_epochs;
  j["max_epochs"] = b.max_epochs;
  j["patience"] = b.patience;
  j["clip_norm"] = b.clip_norm;
  return j;
}

BaselineConfig baseline_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"hidden", "lr", "inner_lr", "inner_epochs", "inner_batch", "ds_epochs",
                       "max_epochs", "patience", "clip_norm"},
                      "baseline");
  BaselineConfig b;
  read_field(j, "hidden", b.hidden);
  read_field(j, "lr", b.lr);
  read_field(j, "inner_lr", b.inner_lr);
  read_field(j, "inner_epochs", b.inner_epochs);
  read_field(j, "inner_batch", b.inner_batch);
  read_field(j, "ds_epochs", b.ds_epochs);
  read_field(j, "max_epochs", b.max_epochs);
  read_field(j, "patience", b.patience);
  read_field(j, "clip_norm", b.clip_norm);
  return b;
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  j["dataset_root"] = dataset_root.string();
  j["prepared_dir"] = prepared_dir.string();
  j["output_dir"] = output_dir.string();
  j["methods"] = methods;
  j["seeds"] = seeds;
  j["n_support_test"] = n_support_test;
  j["train"] = train_to_json(train);
  j["model"] = model_to_json(model);
  j["baseline"] = baseline_to_json(baseline);
  json sw;
  sw["train_task_counts"] = sweep.train_task_counts;
  sw["test_support_sizes"] = sweep.test_support_sizes;
  j["sweep"] = std::move(sw);
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  // A run manifest embeds the config it ran with; accept it directly so a
  // recorded run can be replayed.
  if (j.contains("config") && j.value("format", "") == "fewts-manifest") {
    j = j.at("config");
  }
  reject_unknown_keys(j,
                      {"dataset_root", "prepared_dir", "output_dir", "methods", "seeds",
                       "n_support_test", "train", "model", "baseline", "sweep"},
                      "config");
  ExperimentConfig cfg;
  std::string tmp;
  read_field(j, "dataset_root", tmp);
  cfg.dataset_root = tmp;
  tmp.clear();
  read_field(j, "prepared_dir", tmp);
  cfg.prepared_dir = tmp;
  tmp.clear();
  read_field(j, "output_dir", tmp);
  cfg.output_dir = tmp;
  read_field(j, "methods", cfg.methods);
  read_field(j, "seeds", cfg.seeds);
  read_field(j, "n_support_test", cfg.n_support_test);
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
  if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
  if (j.contains("baseline")) cfg.baseline = baseline_from_json(j.at("baseline"));
  if (j.contains("sweep")) {
    reject_unknown_keys(j.at("sweep"), {"train_task_counts", "test_support_sizes"}, "sweep");
    read_field(j.at("sweep"), "train_task_counts", cfg.sweep.train_task_counts);
    read_field(j.at("sweep"), "test_support_sizes", cfg.sweep.test_support_sizes);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const fs::path& path) {
  return from_json(read_text_file(path));
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a64(to_json()); }

// --- evaluation ----------------------------------------------------------------

double evaluate_task(Forecaster& forecaster, const SeriesSet& task, std::size_t n_support_test,
                     std::uint64_t seed) {
  const std::size_t n = task.series.size();
  if (n < n_support_test + 1) {
    throw DataError("evaluate_task: task '" + task.name + "' has " + std::to_string(n) +
                    " series, need " + std::to_string(n_support_test + 1));
  }
  Rng rng(derive_seed(seed, "support:" + task.name));
  const std::vector<std::size_t> pick = rng.sample_without_replacement(n, n_support_test);
  std::vector<bool> in_support(n, false);
  std::vector<std::vector<double>> support;
  support.reserve(n_support_test);
  for (std::size_t idx : pick) {
    in_support[idx] = true;
    support.push_back(task.series[idx]);
  }
  forecaster.prepare(support);

  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_support[i]) continue;
    const auto& s = task.series[i];
    const std::vector<double> preds = forecaster.predict_series(s);
    if (preds.size() != s.size() - 1) {
      throw DimensionError("evaluate_task: method '" + forecaster.name() + "' returned " +
                           std::to_string(preds.size()) + " predictions for a length-" +
                           std::to_string(s.size()) + " series");
    }
    for (std::size_t t = 0; t < preds.size(); ++t) {
      const double d = preds[t] - s[t + 1];
      acc += d * d;
    }
    count += preds.size();
  }
  return std::sqrt(acc / static_cast<double>(count));
}

// --- result table ----------------------------------------------------------------

double ResultTable::cell(const std::string& task, const std::string& method) const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& r : raw) {
    if (r.task == task && r.method == method) {
      acc += r.rmse;
      ++n;
    }
  }
  return n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double ResultTable::method_mean(const std::string& method) const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& task : tasks) {
    const double v = cell(task, method);
    if (!std::isnan(v)) {
      acc += v;
      ++n;
    }
  }
  return n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

std::string ResultTable::to_csv() const {
  std::string out = "task";
  for (const auto& m : methods) out += "," + m;
  out += "\n";
  for (const auto& task : tasks) {
    out += task;
    for (const auto& m : methods) out += "," + fmt_double(cell(task, m));
    out += "\n";
  }
  out += "mean";
  for (const auto& m : methods) out += "," + fmt_double(method_mean(m));
  out += "\n";
  return out;
}

std::string ResultTable::raw_to_csv() const {
  std::string out = "seed,task,method,rmse\n";
  for (const auto& r : raw) {
    out += std::to_string(r.seed) + "," + r.task + "," + r.method + "," + fmt_double(r.rmse) + "\n";
  }
  return out;
}

// --- run_experiment ----------------------------------------------------------------

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Everything trained once per (method, seed) and reused across target tasks.
struct MethodState {
  std::string method;
  std::string meta;  // ours | pre | maml | di | ds
  ModelParams model_best, model_last;
  bool has_model = false;
  BaseParams base_best, base_last;
  bool has_base = false;
  BaselineConfig bcfg;  // filled for maml/di/ds
  std::vector<EpochRecord> history;
  double train_seconds = 0.0;
};

MethodState train_method(const ExperimentConfig& cfg, const std::string& method,
                         const std::vector<SeriesSet>& train_sets,
                         const std::vector<SeriesSet>& val_sets, std::uint64_t seed) {
  MethodState st;
  st.method = method;
  std::string base;
  parse_method(method, st.meta, base);
  const auto t0 = std::chrono::steady_clock::now();

  if (st.meta == "ours") {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    TrainResult r = train(cfg.model, train_sets, val_sets, tc);
    st.model_best = std::move(r.best);
    st.model_last = std::move(r.last);
    st.has_model = true;
    st.history = std::move(r.history);
    st.train_seconds = seconds_since(t0);
    return st;
  }
  if (st.meta == "pre") return st;

  st.bcfg = cfg.baseline;
  st.bcfg.base = base_kind_from_name(base);
  st.bcfg.seed = seed;
  st.bcfg.n_support = cfg.train.n_support;
  st.bcfg.n_query = cfg.train.n_query;
  if (st.meta == "di") {
    BaselineTrainResult r = train_di(train_sets, val_sets, st.bcfg);
    st.base_best = std::move(r.best);
    st.base_last = std::move(r.last);
    st.has_base = true;
    st.history = std::move(r.history);
    st.train_seconds = seconds_since(t0);
  } else if (st.meta == "maml") {
    BaselineTrainResult r = train_maml(train_sets, val_sets, st.bcfg);
    st.base_best = std::move(r.best);
    st.base_last = std::move(r.last);
    st.has_base = true;
    st.history = std::move(r.history);
    st.train_seconds = seconds_since(t0);
  }
  // ds: nothing to train ahead of time.
  return st;
}

std::unique_ptr<Forecaster> task_forecaster(const MethodState& st, std::uint64_t seed,
                                            const std::string& task_name) {
  if (st.meta == "ours") return make_ours_forecaster(st.model_best);
  if (st.meta == "pre") return make_pre_forecaster();
  if (st.meta == "di") return make_di_forecaster(st.method, st.base_best);
  if (st.meta == "maml") return make_maml_forecaster(st.method, st.base_best, st.bcfg);
  // ds: fresh fit per task, seeded by (run seed, task)
  BaselineConfig bc = st.bcfg;
  bc.seed = derive_seed(seed, "ds:" + task_name);
  return make_ds_forecaster(st.method, bc);
}

std::vector<SeriesSet> resolve_tasks(const std::vector<SeriesSet>& all,
                                     const std::vector<std::string>& names) {
  std::vector<SeriesSet> out;
  out.reserve(names.size());
  for (const auto& name : names) {
    auto it = std::find_if(all.begin(), all.end(),
                           [&](const SeriesSet& s) { return s.name == name; });
    if (it == all.end()) throw DataError("task '" + name + "' missing from prepared data");
    out.push_back(*it);
  }
  return out;
}

std::string timing_to_csv(const std::vector<TimingRecord>& timing) {
  std::string out = "seed,method,phase,task,seconds\n";
  for (const auto& t : timing) {
    out += std::to_string(t.seed) + "," + t.method + "," + t.phase + "," + t.task + "," +
           fmt_double(t.seconds) + "\n";
  }
  return out;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("config: output_dir is required");
  const std::vector<SeriesSet> all_tasks = load_prepared_dir(cfg.prepared_dir);
  std::vector<std::string> names;
  for (const auto& t : all_tasks) names.push_back(t.name);

  fs::create_directories(cfg.output_dir / "checkpoints");

  RunArtifacts art;
  std::set<std::string> target_names;

  for (std::uint64_t seed : cfg.seeds) {
    const std::size_t raw_mark = art.table.raw.size();
    const std::size_t timing_mark = art.timing.size();
    try {
      const Split split = split_tasks_scaled(names, seed);
      const std::vector<SeriesSet> train_sets = resolve_tasks(all_tasks, split.train);
      const std::vector<SeriesSet> val_sets = resolve_tasks(all_tasks, split.val);
      const std::vector<SeriesSet> target_sets = resolve_tasks(all_tasks, split.target);

      for (const std::string& method : cfg.methods) {
        MethodState st = train_method(cfg, method, train_sets, val_sets, seed);
        const std::string tag = method + "_" + std::to_string(seed);
        if (!st.history.empty()) {
          write_history_csv(cfg.output_dir / ("history_" + tag + ".csv"), st.history);
          art.timing.push_back({seed, method, "train", "", st.train_seconds});
        }
        if (st.has_model) {
          st.model_best.save(cfg.output_dir / "checkpoints" / (tag + "_best.json"));
          st.model_last.save(cfg.output_dir / "checkpoints" / (tag + "_last.json"));
        }
        if (st.has_base) {
          st.base_best.save(cfg.output_dir / "checkpoints" / (tag + "_best.json"));
          st.base_last.save(cfg.output_dir / "checkpoints" / (tag + "_last.json"));
        }

        for (const SeriesSet& task : target_sets) {
          auto forecaster = task_forecaster(st, seed, task.name);
          const auto t0 = std::chrono::steady_clock::now();
          const double rmse = evaluate_task(*forecaster, task, cfg.n_support_test, seed);
          art.timing.push_back({seed, method, "test", task.name, seconds_since(t0)});
          art.table.raw.push_back({seed, task.name, method, rmse});
          target_names.insert(task.name);
        }
      }
    } catch (const std::exception& e) {
      std::cerr << "seed " << seed << " failed: " << e.what() << "\n";
      art.table.raw.resize(raw_mark);
      art.timing.resize(timing_mark);
      art.failed_seeds.push_back(seed);
    }
  }

  if (art.failed_seeds.size() == cfg.seeds.size()) {
    throw Error("run_experiment: every seed failed");
  }

  art.table.methods = cfg.methods;
  art.table.tasks.assign(target_names.begin(), target_names.end());

  write_text_file(cfg.output_dir / "results.csv", art.table.to_csv());
  write_text_file(cfg.output_dir / "results_raw.csv", art.table.raw_to_csv());
  write_text_file(cfg.output_dir / "timing.csv", timing_to_csv(art.timing));

  json manifest;
  manifest["format"] = "fewts-manifest";
  manifest["version"] = FEWTS_VERSION;
  manifest["config"] = json::parse(cfg.to_json());
  manifest["config_hash"] = cfg.config_hash();
  manifest["failed_seeds"] = art.failed_seeds;
  write_text_file(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return art;
}

// --- sweeps ----------------------------------------------------------------

std::filesystem::path sweep(const ExperimentConfig& cfg, SweepAxis axis) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("config: output_dir is required");
  const std::vector<SeriesSet> all_tasks = load_prepared_dir(cfg.prepared_dir);
  std::vector<std::string> names;
  for (const auto& t : all_tasks) names.push_back(t.name);
  fs::create_directories(cfg.output_dir);

  const std::vector<std::size_t>& values = (axis == SweepAxis::train_tasks)
                                               ? cfg.sweep.train_task_counts
                                               : cfg.sweep.test_support_sizes;
  if (values.empty()) throw ConfigError("config: sweep axis has no values");

  // (axis value, method) -> accumulated RMSE over seeds x target tasks
  std::map<std::pair<std::size_t, std::string>, std::pair<double, std::size_t>> acc;

  for (std::uint64_t seed : cfg.seeds) {
    const Split split = split_tasks_scaled(names, seed);
    const std::vector<SeriesSet> train_sets = resolve_tasks(all_tasks, split.train);
    const std::vector<SeriesSet> val_sets = resolve_tasks(all_tasks, split.val);
    const std::vector<SeriesSet> target_sets = resolve_tasks(all_tasks, split.target);

    for (const std::string& method : cfg.methods) {
      if (axis == SweepAxis::train_tasks) {
        for (std::size_t count : values) {
          if (count == 0 || count > train_sets.size()) {
            throw ConfigError("sweep: train task count " + std::to_string(count) +
                              " outside 1.." + std::to_string(train_sets.size()));
          }
          const std::vector<SeriesSet> subset(train_sets.begin(),
                                              train_sets.begin() + static_cast<std::ptrdiff_t>(count));
          MethodState st = train_method(cfg, method, subset, val_sets, seed);
          for (const SeriesSet& task : target_sets) {
            auto forecaster = task_forecaster(st, seed, task.name);
            const double rmse = evaluate_task(*forecaster, task, cfg.n_support_test, seed);
            auto& slot = acc[{count, method}];
            slot.first += rmse;
            slot.second += 1;
          }
        }
      } else {
        // One training run, evaluated at every support size. Support draws
        // are prefix-nested across sizes because the per-task sampler is
        // restarted from the same seed.
        MethodState st = train_method(cfg, method, train_sets, val_sets, seed);
        for (std::size_t size : values) {
          if (size == 0 || size >= kSeriesPerTask) {
            throw ConfigError("sweep: test support size " + std::to_string(size) +
                              " outside 1.." + std::to_string(kSeriesPerTask - 1));
          }
          for (const SeriesSet& task : target_sets) {
            auto forecaster = task_forecaster(st, seed, task.name);
            const double rmse = evaluate_task(*forecaster, task, size, seed);
            auto& slot = acc[{size, method}];
            slot.first += rmse;
            slot.second += 1;
          }
        }
      }
    }
  }

  std::string out = "axis_value,method,mean_rmse\n";
  for (std::size_t value : values) {
    for (const std::string& method : cfg.methods) {
      const auto& slot = acc.at({value, method});
      out += std::to_string(value) + "," + method + "," +
             fmt_double(slot.first / static_cast<double>(slot.second)) + "\n";
    }
  }
  const fs::path file =
      cfg.output_dir /
      ((axis == SweepAxis::train_tasks) ? "sweep_train_tasks.csv" : "sweep_support.csv");
  write_text_file(file, out);
  return file;
}

// --- traces ----------------------------------------------------------------

std::string emit_traces(Forecaster& forecaster, const SeriesSet& task,
                        const std::vector<std::size_t>& series_indices,
                        std::size_t n_support_test, std::uint64_t seed) {
  const std::size_t n = task.series.size();
  for (std::size_t idx : series_indices) {
    if (idx >= n) {
      throw ConfigError("traces: series index " + std::to_string(idx) + " outside 0.." +
                        std::to_string(n - 1));
    }
  }
  // Same seeded support as evaluate_task, so traces match reported RMSE.
  Rng rng(derive_seed(seed, "support:" + task.name));
  const std::vector<std::size_t> pick = rng.sample_without_replacement(n, n_support_test);
  std::vector<std::vector<double>> support;
  for (std::size_t idx : pick) support.push_back(task.series[idx]);
  forecaster.prepare(support);

  std::string out = "task,series,t,true,predicted\n";
  for (std::size_t idx : series_indices) {
    const auto& s = task.series[idx];
    const std::vector<double> preds = forecaster.predict_series(s);
    for (std::size_t t = 2; t <= s.size(); ++t) {
      out += task.name + "," + std::to_string(idx) + "," + std::to_string(t) + "," +
             fmt_double(s[t - 1]) + "," + fmt_double(preds[t - 2]) + "\n";
    }
  }
  return out;
}

// --- report ----------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  for (const std::string& line : split(text, '\n')) {
    if (trim(line).empty()) continue;
    rows.push_back(split(line, ','));
  }
  return rows;
}

}  // namespace

void write_report(const fs::path& run_dir, std::ostream& out) {
  const fs::path results = run_dir / "results.csv";
  if (!fs::exists(results)) throw DataError("no results.csv in " + run_dir.string());
  const auto rows = parse_csv(read_text_file(results));
  if (rows.empty()) throw DataError("empty results.csv in " + run_dir.string());

  // Column widths over formatted cells (4 decimals; lowest RMSE starred).
  const std::size_t ncols = rows[0].size();
  std::vector<std::vector<std::string>> cells(rows.size(), std::vector<std::string>(ncols));
  cells[0] = rows[0];
  for (std::size_t r = 1; r < rows.size(); ++r) {
    cells[r][0] = rows[r][0];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 1; c < ncols; ++c) {
      best = std::min(best, parse_double(rows[r][c], "results.csv"));
    }
    for (std::size_t c = 1; c < ncols; ++c) {
      const double v = parse_double(rows[r][c], "results.csv");
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%.4f%s", v, (v == best && ncols > 2) ? "*" : "");
      cells[r][c] = buf;
    }
  }
  std::vector<std::size_t> width(ncols, 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < ncols; ++c) width[c] = std::max(width[c], row[c].size());
  }

  out << "RMSE by target task (mean over seeds; * = best in row)\n\n";
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < ncols; ++c) {
      if (c) out << "  ";
      out << cells[r][c] << std::string(width[c] - cells[r][c].size(), ' ');
    }
    out << "\n";
    if (r == 0 || r + 2 == cells.size()) out << "\n";
  }

  const fs::path timing = run_dir / "timing.csv";
  if (fs::exists(timing)) {
    const auto trows = parse_csv(read_text_file(timing));
    std::map<std::string, std::pair<double, std::size_t>> train_acc, test_acc;
    for (std::size_t r = 1; r < trows.size(); ++r) {
      const auto& row = trows[r];
      if (row.size() != 5) continue;
      auto& slot = (row[2] == "train") ? train_acc[row[1]] : test_acc[row[1]];
      slot.first += parse_double(row[4], "timing.csv");
      slot.second += 1;
    }
    out << "\nTiming (seconds)\n";
    out << "  method: train mean | test mean per task\n";
    std::set<std::string> methods;
    for (const auto& [m, _] : train_acc) methods.insert(m);
    for (const auto& [m, _] : test_acc) methods.insert(m);
    for (const auto& m : methods) {
      out << "  " << m << ": ";
      if (train_acc.count(m)) {
        out << fmt_double(train_acc[m].first / static_cast<double>(train_acc[m].second));
      } else {
        out << "-";
      }
      out << " | ";
      if (test_acc.count(m)) {
        out << fmt_double(test_acc[m].first / static_cast<double>(test_acc[m].second));
      } else {
        out << "-";
      }
      out << "\n";
    }
  }

  out << "\nNotes\n"
      << "  - MAML baselines use the first-order approximation (query-loss\n"
      << "    gradients at the adapted parameters update the initialization;\n"
      << "    no second-order terms).\n"
      << "  - Significance testing is an external step: rerun with more seeds\n"
      << "    and compare per-task RMSE columns pairwise (see README).\n";
}

}  // namespace fewts
