// Synthetic task generators: small corpora with task-specific dynamics so
// tests can tell a model that adapts from one that does not.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fewts/data.hpp"
#include "fewts/rng.hpp"

namespace synth {

enum class Kind { ar1, sine };

struct TaskSpec {
  std::string name;
  Kind kind = Kind::ar1;
  double p1 = 0.8;     // ar1: coefficient; sine: period
  double p2 = 1.0;     // ar1: unused; sine: amplitude
  double noise = 0.1;  // innovation / observation noise scale
  std::uint64_t seed = 0;
};

std::vector<double> gen_series(fewts::Rng& rng, std::size_t len, const TaskSpec& spec);

// A ready SeriesSet: n_series x len, normalized here (pooled mean 0, var 1)
// with its own loops, independent of the library's preparation code.
fewts::SeriesSet make_task(const TaskSpec& spec, std::size_t n_series, std::size_t len);

// A heterogeneous corpus: half AR(1) with spread-out coefficients, half
// sines with spread-out periods. Seeded per task.
std::vector<TaskSpec> corpus_specs(std::size_t n_tasks, std::uint64_t seed);
std::vector<fewts::SeriesSet> make_corpus(std::size_t n_tasks, std::uint64_t seed,
                                          std::size_t n_series, std::size_t len);

// Writes the same kind of corpus as a UCR-layout archive (label column,
// TRAIN/TEST files) so the full ingestion pipeline can run against it.
// Tasks have > 50 series of length > 100 and pass the filter; when
// with_rejects is set, three extra tasks that must be filtered out are
// added (one with a missing value, one too short, one with too few series).
void write_ucr_archive(const std::filesystem::path& root, std::size_t n_tasks,
                       std::uint64_t seed, bool with_rejects);

}  // namespace synth
