// fewts: experiment runner for few-shot time-series forecasting.
//
// Verbs:
//   prepare   filter a UCR-style archive and write the normalized corpus
//   train     train selected methods per seed; write checkpoints + history
//   evaluate  end-to-end run: train + RMSE table + manifest
//   sweep     RMSE vs number of training tasks, or vs test support size
//   traces    per-timestep forecasts for chosen series of one task
//   report    render results.csv / timing.csv of a finished run as text

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fewts/baselines.hpp"
#include "fewts/data.hpp"
#include "fewts/errors.hpp"
#include "fewts/harness.hpp"
#include "fewts/model.hpp"
#include "fewts/trainer.hpp"
#include "fewts/util.hpp"

namespace {

using namespace fewts;

struct Overrides {
  std::string config_file;
  std::string dataset_root;
  std::string prepared_dir;
  std::string output_dir;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  long n_support_test = -1;
  long max_epochs = -1;
  long patience = -1;
  long n_support = -1;
  long n_query = -1;
  double lr = -1.0;
  double dropout = -1.0;
  double clip_norm = -1.0;
};

void add_common_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("-c,--config", ov.config_file, "config file (JSON, or a run manifest)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--data", ov.dataset_root, "UCR-style archive root");
  cmd->add_option("--prepared", ov.prepared_dir, "prepared-corpus directory");
  cmd->add_option("-o,--out", ov.output_dir, "output directory");
  cmd->add_option("--methods", ov.methods, "methods to run")->delimiter(',');
  cmd->add_option("--seeds", ov.seeds, "split seeds")->delimiter(',');
  cmd->add_option("--support-test", ov.n_support_test, "test-time support size");
  cmd->add_option("--epochs", ov.max_epochs, "max training epochs");
  cmd->add_option("--patience", ov.patience, "early-stopping patience (0 = one epoch)");
  cmd->add_option("--n-support", ov.n_support, "episode support size");
  cmd->add_option("--n-query", ov.n_query, "episode query size");
  cmd->add_option("--lr", ov.lr, "learning rate");
  cmd->add_option("--dropout", ov.dropout, "head dropout rate");
  cmd->add_option("--clip", ov.clip_norm, "gradient clipping norm (0 disables)");
}

ExperimentConfig build_config(const Overrides& ov) {
  ExperimentConfig cfg;
  if (!ov.config_file.empty()) cfg = ExperimentConfig::from_json_file(ov.config_file);
  if (cfg.dataset_root.empty()) {
    if (const char* env = std::getenv("FEWTS_UCR_ROOT")) cfg.dataset_root = env;
  }
  if (!ov.dataset_root.empty()) cfg.dataset_root = ov.dataset_root;
  if (!ov.prepared_dir.empty()) cfg.prepared_dir = ov.prepared_dir;
  if (!ov.output_dir.empty()) cfg.output_dir = ov.output_dir;
  if (!ov.methods.empty()) cfg.methods = ov.methods;
  if (!ov.seeds.empty()) cfg.seeds = ov.seeds;
  if (ov.n_support_test >= 0) cfg.n_support_test = static_cast<std::size_t>(ov.n_support_test);
  if (ov.max_epochs >= 0) {
    cfg.train.max_epochs = static_cast<std::size_t>(ov.max_epochs);
    cfg.baseline.max_epochs = static_cast<std::size_t>(ov.max_epochs);
  }
  if (ov.patience >= 0) {
    cfg.train.patience = static_cast<std::size_t>(ov.patience);
    cfg.baseline.patience = static_cast<std::size_t>(ov.patience);
  }
  if (ov.n_support >= 0) cfg.train.n_support = static_cast<std::size_t>(ov.n_support);
  if (ov.n_query >= 0) cfg.train.n_query = static_cast<std::size_t>(ov.n_query);
  if (ov.lr >= 0.0) {
    cfg.train.lr = ov.lr;
    cfg.baseline.lr = ov.lr;
  }
  if (ov.dropout >= 0.0) cfg.train.dropout = ov.dropout;
  if (ov.clip_norm >= 0.0) {
    cfg.train.clip_norm = ov.clip_norm;
    cfg.baseline.clip_norm = ov.clip_norm;
  }
  return cfg;
}

int cmd_prepare(const ExperimentConfig& cfg, std::uint64_t seed, bool list_only) {
  if (cfg.dataset_root.empty()) {
    throw ConfigError("prepare: no dataset root (--data, config, or FEWTS_UCR_ROOT)");
  }
  const auto names = list_archive_tasks(cfg.dataset_root);
  std::cerr << "archive lists " << names.size() << " tasks\n";
  std::vector<RawTask> kept;
  for (const auto& name : names) {
    RawTask task = load_archive_task(cfg.dataset_root, name);
    if (task_passes_filter(task)) kept.push_back(std::move(task));
  }
  std::cerr << kept.size() << " tasks pass the filter (no missing values, length >= "
            << kSeriesLength << ", >= " << kSeriesPerTask << " series)\n";
  if (list_only) {
    for (const auto& t : kept) std::cout << t.name << "\n";
    return 0;
  }
  if (cfg.prepared_dir.empty()) throw ConfigError("prepare: no --prepared directory");
  std::vector<SeriesSet> prepared;
  prepared.reserve(kept.size());
  for (const auto& t : kept) prepared.push_back(prepare_task(t, seed));
  write_prepared_dir(cfg.prepared_dir, prepared, seed);
  std::cout << "wrote " << prepared.size() << " tasks to " << cfg.prepared_dir << "\n";
  return 0;
}

std::vector<SeriesSet> pick_tasks(const std::vector<SeriesSet>& all,
                                  const std::vector<std::string>& names) {
  std::vector<SeriesSet> out;
  for (const auto& name : names) {
    for (const auto& t : all) {
      if (t.name == name) {
        out.push_back(t);
        break;
      }
    }
  }
  if (out.size() != names.size()) throw DataError("train: split names missing from corpus");
  return out;
}

int cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("train: no output directory");
  const auto all = load_prepared_dir(cfg.prepared_dir);
  std::vector<std::string> names;
  for (const auto& t : all) names.push_back(t.name);
  std::filesystem::create_directories(cfg.output_dir / "checkpoints");

  for (std::uint64_t seed : cfg.seeds) {
    const Split split = split_tasks_scaled(names, seed);
    const auto train_sets = pick_tasks(all, split.train);
    const auto val_sets = pick_tasks(all, split.val);
    for (const auto& method : cfg.methods) {
      const std::string tag = method + "_" + std::to_string(seed);
      if (method == "pre") {
        std::cerr << tag << ": nothing to train\n";
        continue;
      }
      if (method.rfind("ds-", 0) == 0) {
        std::cerr << tag << ": fit happens per target task at evaluation time\n";
        continue;
      }
      std::cerr << "training " << tag << " on " << train_sets.size() << " tasks...\n";
      if (method == "ours") {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        TrainResult r = train(cfg.model, train_sets, val_sets, tc);
        write_history_csv(cfg.output_dir / ("history_" + tag + ".csv"), r.history);
        r.best.save(cfg.output_dir / "checkpoints" / (tag + "_best.json"));
        r.last.save(cfg.output_dir / "checkpoints" / (tag + "_last.json"));
        std::cerr << tag << ": best val loss " << fmt_double(r.best_val_loss) << " at epoch "
                  << r.best_epoch << "\n";
      } else {
        BaselineConfig bc = cfg.baseline;
        bc.base = base_kind_from_name(method.substr(method.find('-') + 1));
        bc.seed = seed;
        bc.n_support = cfg.train.n_support;
        bc.n_query = cfg.train.n_query;
        BaselineTrainResult r = (method.rfind("maml-", 0) == 0)
                                    ? train_maml(train_sets, val_sets, bc)
                                    : train_di(train_sets, val_sets, bc);
        write_history_csv(cfg.output_dir / ("history_" + tag + ".csv"), r.history);
        r.best.save(cfg.output_dir / "checkpoints" / (tag + "_best.json"));
        r.last.save(cfg.output_dir / "checkpoints" / (tag + "_last.json"));
        std::cerr << tag << ": best val loss " << fmt_double(r.best_val_loss) << " at epoch "
                  << r.best_epoch << "\n";
      }
    }
  }
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
  RunArtifacts art = run_experiment(cfg);
  write_report(cfg.output_dir, std::cout);
  if (!art.failed_seeds.empty()) {
    std::cerr << art.failed_seeds.size() << " seed(s) failed and were skipped\n";
  }
  std::cerr << "artifacts in " << cfg.output_dir << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& axis) {
  SweepAxis ax;
  if (axis == "train-tasks") {
    ax = SweepAxis::train_tasks;
  } else if (axis == "support") {
    ax = SweepAxis::support_size;
  } else {
    throw ConfigError("sweep: axis must be 'train-tasks' or 'support'");
  }
  const auto path = sweep(cfg, ax);
  std::cout << path.string() << "\n";
  return 0;
}

int cmd_traces(const ExperimentConfig& cfg, const std::string& method, const std::string& task_name,
               std::vector<std::size_t> series, const std::string& checkpoint,
               std::uint64_t seed) {
  cfg.validate();
  const auto all = load_prepared_dir(cfg.prepared_dir);
  const SeriesSet* task = nullptr;
  for (const auto& t : all) {
    if (t.name == task_name) task = &t;
  }
  if (!task) throw DataError("traces: task '" + task_name + "' not in prepared corpus");
  if (series.empty()) series = {0};

  std::unique_ptr<Forecaster> forecaster;
  if (method == "pre") {
    forecaster = make_pre_forecaster();
  } else if (method == "ours") {
    if (checkpoint.empty()) throw ConfigError("traces: --checkpoint required for 'ours'");
    forecaster = make_ours_forecaster(ModelParams::load(checkpoint));
  } else if (method.rfind("ds-", 0) == 0) {
    BaselineConfig bc = cfg.baseline;
    bc.base = base_kind_from_name(method.substr(3));
    bc.seed = derive_seed(seed, "ds:" + task_name);
    forecaster = make_ds_forecaster(method, bc);
  } else if (method.rfind("di-", 0) == 0) {
    if (checkpoint.empty()) throw ConfigError("traces: --checkpoint required for '" + method + "'");
    forecaster = make_di_forecaster(method, BaseParams::load(checkpoint));
  } else if (method.rfind("maml-", 0) == 0) {
    if (checkpoint.empty()) throw ConfigError("traces: --checkpoint required for '" + method + "'");
    BaselineConfig bc = cfg.baseline;
    bc.base = base_kind_from_name(method.substr(5));
    forecaster = make_maml_forecaster(method, BaseParams::load(checkpoint), bc);
  } else {
    throw ConfigError("traces: unknown method '" + method + "'");
  }

  const std::string csv = emit_traces(*forecaster, *task, series, cfg.n_support_test, seed);
  if (cfg.output_dir.empty()) {
    std::cout << csv;
  } else {
    const auto path = cfg.output_dir /
                      ("traces_" + method + "_" + task_name + "_" + std::to_string(seed) + ".csv");
    write_text_file(path, csv);
    std::cout << path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-shot time-series forecasting experiments"};
  app.require_subcommand(1);

  Overrides ov;
  std::uint64_t prepare_seed = 0;
  bool list_only = false;
  std::string axis = "support";
  std::string trace_method = "ours";
  std::string trace_task;
  std::string trace_checkpoint;
  std::vector<std::size_t> trace_series;
  std::uint64_t trace_seed = 0;
  std::string report_dir;

  auto* prepare = app.add_subcommand("prepare", "filter an archive and write the prepared corpus");
  add_common_flags(prepare, ov);
  prepare->add_option("--seed", prepare_seed, "seed for subsampling");
  prepare->add_flag("--list", list_only, "only print task names that pass the filter");

  auto* train_cmd = app.add_subcommand("train", "train methods for each seed");
  add_common_flags(train_cmd, ov);

  auto* evaluate = app.add_subcommand("evaluate", "train and evaluate; write the RMSE table");
  add_common_flags(evaluate, ov);

  auto* sweep_cmd = app.add_subcommand("sweep", "RMSE across an axis");
  add_common_flags(sweep_cmd, ov);
  sweep_cmd->add_option("--axis", axis, "'train-tasks' or 'support'");

  auto* traces = app.add_subcommand("traces", "emit per-timestep forecasts for one task");
  add_common_flags(traces, ov);
  traces->add_option("--method", trace_method, "forecaster to trace");
  traces->add_option("--task", trace_task, "target task name")->required();
  traces->add_option("--series", trace_series, "series indices")->delimiter(',');
  traces->add_option("--checkpoint", trace_checkpoint, "trained parameter file");
  traces->add_option("--seed", trace_seed, "split seed used for the support draw");

  auto* report = app.add_subcommand("report", "render a finished run as text");
  report->add_option("run_dir", report_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return (app.exit(e) == 0) ? 0 : static_cast<int>(fewts::ExitCode::config);
  }

  try {
    if (report->parsed()) {
      fewts::write_report(report_dir, std::cout);
      return 0;
    }
    const ExperimentConfig cfg = build_config(ov);
    if (prepare->parsed()) return cmd_prepare(cfg, prepare_seed, list_only);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, axis);
    if (traces->parsed()) {
      return cmd_traces(cfg, trace_method, trace_task, trace_series, trace_checkpoint, trace_seed);
    }
  } catch (const fewts::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return static_cast<int>(fewts::ExitCode::config);
  } catch (const fewts::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return static_cast<int>(fewts::ExitCode::data);
  } catch (const fewts::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return static_cast<int>(fewts::ExitCode::numeric);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(fewts::ExitCode::other);
  }
  return 0;
}
