#include "fewts/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fewts/errors.hpp"
#include "fewts/util.hpp"
#include "json.hpp"

namespace fewts {

using nlohmann::json;
namespace fs = std::filesystem;

void SeriesSet::check() const {
  if (series.size() != kSeriesPerTask) {
    throw DataError("task '" + name + "': " + std::to_string(series.size()) + " series, expected " +
                    std::to_string(kSeriesPerTask));
  }
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& s : series) {
    if (s.size() != kSeriesLength) {
      throw DataError("task '" + name + "': series of length " + std::to_string(s.size()) +
                      ", expected " + std::to_string(kSeriesLength));
    }
    for (double v : s) {
      if (!std::isfinite(v)) throw DataError("task '" + name + "': non-finite value");
      sum += v;
      sum_sq += v * v;
    }
  }
  const double n = static_cast<double>(kSeriesPerTask * kSeriesLength);
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  if (std::abs(mean) > 1e-9 || std::abs(var - 1.0) > 1e-9) {
    throw DataError("task '" + name + "': pooled mean/variance " + fmt_double(mean) + "/" +
                    fmt_double(var) + " not normalized");
  }
}

std::vector<std::vector<double>> load_task_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  if (text.empty()) throw DataError("empty task file: " + path.string());

  // The archive ships tab-separated files; some tasks use commas. Decide
  // from the first data line.
  const std::size_t first_eol = text.find('\n');
  const std::string first_line = text.substr(0, first_eol);
  const char delim = (first_line.find('\t') != std::string::npos) ? '\t' : ',';

  std::vector<std::vector<double>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    ++line_no;
    const std::string_view line = trim(std::string_view(text).substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;

    std::vector<std::string> fields = split(line, delim);
    if (fields.size() < 2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": row has no values after the label column");
    }
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const std::string_view tok = trim(fields[i]);
      if (tok.empty() || tok == "NaN" || tok == "nan" || tok == "NA" || tok == "?") {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        values.push_back(
            parse_double(tok, path.string() + ":" + std::to_string(line_no)));
      }
    }
    out.push_back(std::move(values));
  }
  if (out.empty()) throw DataError("no data rows in task file: " + path.string());
  return out;
}

RawTask load_archive_task(const fs::path& root, const std::string& name) {
  RawTask task;
  task.name = name;
  task.provenance = root / name;
  for (const char* suffix : {"_TRAIN.tsv", "_TEST.tsv"}) {
    const fs::path file = root / name / (name + suffix);
    if (!fs::exists(file)) throw DataError("missing archive file: " + file.string());
    std::vector<std::vector<double>> rows = load_task_file(file);
    for (auto& r : rows) task.series.push_back(std::move(r));
  }
  return task;
}

std::vector<std::string> list_archive_tasks(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("archive root is not a directory: " + root.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (fs::exists(entry.path() / (name + "_TRAIN.tsv")) &&
        fs::exists(entry.path() / (name + "_TEST.tsv"))) {
      names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

bool task_passes_filter(const RawTask& task) {
  if (task.series.size() < kSeriesPerTask) return false;
  for (const auto& s : task.series) {
    if (s.size() < kSeriesLength) return false;
    for (double v : s) {
      if (std::isnan(v)) return false;
    }
  }
  return true;
}

std::vector<RawTask> filter_tasks(std::vector<RawTask> tasks) {
  std::vector<RawTask> out;
  for (auto& t : tasks) {
    if (task_passes_filter(t)) out.push_back(std::move(t));
  }
  return out;
}

SeriesSet prepare_task(const RawTask& task, std::uint64_t seed) {
  if (!task_passes_filter(task)) {
    throw DataError("task '" + task.name + "' does not satisfy the filter (50 series x 100 values, no missing)");
  }
  Rng rng(derive_seed(seed, "subsample:" + task.name));
  std::vector<std::size_t> pick = rng.sample_without_replacement(task.series.size(), kSeriesPerTask);
  std::sort(pick.begin(), pick.end());  // keep archive order among the kept series

  SeriesSet set;
  set.name = task.name;
  set.series.reserve(kSeriesPerTask);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t idx : pick) {
    const auto& src = task.series[idx];
    std::vector<double> s(src.begin(), src.begin() + kSeriesLength);
    for (double v : s) {
      sum += v;
      sum_sq += v * v;
    }
    set.series.push_back(std::move(s));
  }
  const double n = static_cast<double>(kSeriesPerTask * kSeriesLength);
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  if (!(var > 0.0)) {
    throw DataError("task '" + task.name + "': zero variance, cannot normalize");
  }
  const double stddev = std::sqrt(var);
  for (auto& s : set.series) {
    for (double& v : s) v = (v - mean) / stddev;
  }
  set.norm = {mean, stddev};
  set.check();
  return set;
}

namespace {

Split split_with_sizes(const std::vector<std::string>& names, std::uint64_t seed,
                       std::size_t n_train, std::size_t n_val) {
  std::vector<std::string> shuffled = names;
  std::sort(shuffled.begin(), shuffled.end());  // canonical order before the seeded shuffle
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(shuffled);
  Split split;
  split.seed = seed;
  split.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  split.val.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  split.target.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  return split;
}

}  // namespace

Split split_tasks(const std::vector<std::string>& names, std::uint64_t seed) {
  if (names.size() != 90) {
    throw DataError("split_tasks: " + std::to_string(names.size()) +
                    " tasks, expected 90 (use the proportional split for subsets)");
  }
  return split_with_sizes(names, seed, 55, 10);
}

Split split_tasks_scaled(const std::vector<std::string>& names, std::uint64_t seed) {
  const std::size_t n = names.size();
  if (n < 3) throw DataError("split_tasks_scaled: need at least 3 tasks, got " + std::to_string(n));
  if (n == 90) return split_tasks(names, seed);
  const std::size_t n_train = n * 55 / 90;
  const std::size_t n_val = std::max<std::size_t>(1, n * 10 / 90);
  if (n_train == 0 || n_train + n_val >= n) {
    throw DataError("split_tasks_scaled: cannot partition " + std::to_string(n) + " tasks");
  }
  return split_with_sizes(names, seed, n_train, n_val);
}

// --- prepared directory -----------------------------------------------------

namespace {

std::string task_csv(const SeriesSet& set) {
  std::string out;
  out.reserve(kSeriesPerTask * kSeriesLength * 20);
  for (const auto& s : set.series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ',';
      out += fmt_double(s[i]);
    }
    out += '\n';
  }
  return out;
}

fs::path manifest_path(const fs::path& dir) { return dir / "manifest.json"; }

json load_manifest(const fs::path& dir) {
  try {
    return json::parse(read_text_file(manifest_path(dir)));
  } catch (const json::exception& e) {
    throw DataError("malformed prepared-data manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace

void write_prepared_dir(const fs::path& dir, const std::vector<SeriesSet>& tasks,
                        std::uint64_t seed) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "fewts-prepared";
  manifest["seed"] = seed;
  manifest["series_per_task"] = kSeriesPerTask;
  manifest["series_length"] = kSeriesLength;
  json jtasks = json::array();
  std::vector<const SeriesSet*> ordered;
  for (const auto& t : tasks) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(),
            [](const SeriesSet* a, const SeriesSet* b) { return a->name < b->name; });
  for (const SeriesSet* t : ordered) {
    t->check();
    const std::string csv = task_csv(*t);
    write_text_file(dir / (t->name + ".csv"), csv);
    json jt;
    jt["name"] = t->name;
    jt["mean"] = t->norm.mean;
    jt["std"] = t->norm.stddev;
    jt["checksum"] = fnv1a64(csv);
    jtasks.push_back(std::move(jt));
  }
  manifest["tasks"] = std::move(jtasks);
  write_text_file(manifest_path(dir), manifest.dump(2) + "\n");
}

std::vector<std::string> list_prepared_tasks(const fs::path& dir) {
  const json manifest = load_manifest(dir);
  std::vector<std::string> names;
  try {
    for (const auto& jt : manifest.at("tasks")) names.push_back(jt.at("name").get<std::string>());
  } catch (const json::exception& e) {
    throw DataError("malformed prepared-data manifest in " + dir.string() + ": " + e.what());
  }
  return names;
}

std::uint64_t prepared_dir_seed(const fs::path& dir) {
  try {
    return load_manifest(dir).at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError("malformed prepared-data manifest in " + dir.string() + ": " + e.what());
  }
}

SeriesSet load_prepared_task(const fs::path& dir, const std::string& name) {
  const json manifest = load_manifest(dir);
  json jt;
  for (const auto& entry : manifest.at("tasks")) {
    if (entry.at("name").get<std::string>() == name) {
      jt = entry;
      break;
    }
  }
  if (jt.is_null()) throw DataError("task '" + name + "' not in prepared dataset " + dir.string());

  const std::string csv = read_text_file(dir / (name + ".csv"));
  if (fnv1a64(csv) != jt.at("checksum").get<std::uint64_t>()) {
    throw DataError("task '" + name + "': prepared file does not match manifest checksum");
  }
  SeriesSet set;
  set.name = name;
  set.norm = {jt.at("mean").get<double>(), jt.at("std").get<double>()};
  for (const std::string& line : split(csv, '\n')) {
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, ',');
    std::vector<double> s;
    s.reserve(fields.size());
    for (const auto& f : fields) s.push_back(parse_double(f, dir.string() + "/" + name + ".csv"));
    set.series.push_back(std::move(s));
  }
  set.check();
  return set;
}

std::vector<SeriesSet> load_prepared_dir(const fs::path& dir) {
  std::vector<SeriesSet> out;
  for (const std::string& name : list_prepared_tasks(dir)) {
    out.push_back(load_prepared_task(dir, name));
  }
  return out;
}

}  // namespace fewts
