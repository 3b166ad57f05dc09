#include "support/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "fewts/util.hpp"

namespace synth {

using fewts::Rng;
using fewts::SeriesSet;

std::vector<double> gen_series(Rng& rng, std::size_t len, const TaskSpec& spec) {
  std::vector<double> s(len);
  if (spec.kind == Kind::ar1) {
    double x = rng.normal();
    for (std::size_t t = 0; t < len; ++t) {
      x = spec.p1 * x + spec.noise * rng.normal();
      s[t] = x;
    }
  } else {
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < len; ++t) {
      s[t] = spec.p2 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.p1 + phase) +
             spec.noise * rng.normal();
    }
  }
  return s;
}

SeriesSet make_task(const TaskSpec& spec, std::size_t n_series, std::size_t len) {
  Rng rng(spec.seed);
  SeriesSet set;
  set.name = spec.name;
  set.series.resize(n_series);
  double sum = 0.0, sq = 0.0;
  for (auto& s : set.series) {
    s = gen_series(rng, len, spec);
    for (double v : s) {
      sum += v;
      sq += v * v;
    }
  }
  const double n = static_cast<double>(n_series * len);
  const double mean = sum / n;
  const double stddev = std::sqrt(sq / n - mean * mean);
  for (auto& s : set.series) {
    for (auto& v : s) v = (v - mean) / stddev;
  }
  set.norm = {mean, stddev};
  return set;
}

std::vector<TaskSpec> corpus_specs(std::size_t n_tasks, std::uint64_t seed) {
  std::vector<TaskSpec> specs;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    TaskSpec spec;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02zu", i);
    spec.seed = fewts::derive_seed(seed, "synth-task:" + std::to_string(i));
    if (i % 2 == 0) {
      spec.name = "Ar" + std::string(buf);
      spec.kind = Kind::ar1;
      // coefficients spread over [0.25, 0.95]
      spec.p1 = 0.25 + 0.7 * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n_tasks - 1, 1));
      spec.noise = 0.3;
    } else {
      spec.name = "Sin" + std::string(buf);
      spec.kind = Kind::sine;
      spec.p1 = 8.0 + 3.0 * static_cast<double>(i);  // period
      spec.p2 = 1.0;
      spec.noise = 0.05;
    }
    specs.push_back(spec);
  }
  return specs;
}

std::vector<SeriesSet> make_corpus(std::size_t n_tasks, std::uint64_t seed, std::size_t n_series,
                                   std::size_t len) {
  std::vector<SeriesSet> out;
  for (const auto& spec : corpus_specs(n_tasks, seed)) {
    out.push_back(make_task(spec, n_series, len));
  }
  return out;
}

namespace {

std::string tsv_row(int label, const std::vector<double>& values) {
  std::string row = std::to_string(label);
  for (double v : values) {
    row += "\t";
    row += fewts::fmt_double(v);
  }
  row += "\n";
  return row;
}

void write_task_files(const std::filesystem::path& root, const std::string& name,
                      const std::vector<std::vector<double>>& train,
                      const std::vector<std::vector<double>>& test) {
  std::string train_text, test_text;
  for (const auto& s : train) train_text += tsv_row(1, s);
  for (const auto& s : test) test_text += tsv_row(1, s);
  fewts::write_text_file(root / name / (name + "_TRAIN.tsv"), train_text);
  fewts::write_text_file(root / name / (name + "_TEST.tsv"), test_text);
}

}  // namespace

void write_ucr_archive(const std::filesystem::path& root, std::size_t n_tasks, std::uint64_t seed,
                       bool with_rejects) {
  const std::size_t len = 112;  // > 100 so truncation is exercised
  for (const auto& spec : corpus_specs(n_tasks, seed)) {
    Rng rng(spec.seed);
    std::vector<std::vector<double>> train, test;
    for (std::size_t i = 0; i < 36; ++i) train.push_back(gen_series(rng, len, spec));
    for (std::size_t i = 0; i < 20; ++i) test.push_back(gen_series(rng, len, spec));
    write_task_files(root, spec.name, train, test);
  }
  if (!with_rejects) return;

  Rng rng(fewts::derive_seed(seed, "rejects"));
  TaskSpec filler{"filler", Kind::ar1, 0.5, 1.0, 0.3, 1};

  // one missing value anywhere excludes the task
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < 60; ++i) rows.push_back(gen_series(rng, len, filler));
  std::string text;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 3) {
      std::string row = "1";
      for (std::size_t t = 0; t < len; ++t) row += (t == 7) ? "\tNaN" : "\t0.5";
      text += row + "\n";
    } else {
      text += tsv_row(1, rows[i]);
    }
  }
  fewts::write_text_file(root / "HasMissing" / "HasMissing_TRAIN.tsv", text);
  fewts::write_text_file(root / "HasMissing" / "HasMissing_TEST.tsv", tsv_row(1, rows[0]));

  // series shorter than 100
  std::vector<std::vector<double>> shorts;
  for (std::size_t i = 0; i < 60; ++i) shorts.push_back(gen_series(rng, 72, filler));
  write_task_files(root, "TooShort", shorts, {shorts[0]});

  // fewer than 50 series in total
  std::vector<std::vector<double>> few;
  for (std::size_t i = 0; i < 30; ++i) few.push_back(gen_series(rng, len, filler));
  write_task_files(root, "TooFew", {few.begin(), few.begin() + 20}, {few.begin() + 20, few.end()});
}

}  // namespace synth
