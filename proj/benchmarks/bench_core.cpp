#include <benchmark/benchmark.h>

#include <vector>

#include "fewts/attention.hpp"
#include "fewts/lstm.hpp"
#include "fewts/model.hpp"
#include "fewts/rng.hpp"
#include "fewts/tensor.hpp"
#include "fewts/trainer.hpp"

namespace {

using namespace fewts;

void bm_matmul_backward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  Tensor a = Tensor::uniform({n, n}, -1.0, 1.0, rng, true);
  Tensor b = Tensor::uniform({n, n}, -1.0, 1.0, rng, true);
  for (auto _ : state) {
    Tensor c = sum(matmul(a, b));
    backward(c);
    benchmark::DoNotOptimize(a.grad());
  }
}
BENCHMARK(bm_matmul_backward)->Arg(32)->Arg(64);

void bm_lstm_step(benchmark::State& state) {
  Rng rng(7);
  LstmParams cell = LstmParams::init(32, 1, rng);
  LstmState s = LstmState::zero(32);
  Tensor x = Tensor::from({0.5}, {1}, false);
  for (auto _ : state) {
    LstmState next = lstm_step(cell, s, x);
    benchmark::DoNotOptimize(next.h.data());
  }
}
BENCHMARK(bm_lstm_step);

void bm_encode_series(benchmark::State& state) {
  Rng rng(7);
  LstmParams cell = LstmParams::init(32, 1, rng);
  std::vector<double> series(100);
  for (auto& v : series) v = rng.normal();
  for (auto _ : state) {
    auto states = encode_forward(cell, series);
    benchmark::DoNotOptimize(states.back().data());
  }
}
BENCHMARK(bm_encode_series);

void bm_attend(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  AttentionParams attn = AttentionParams::init(32, 32, 32, 64, rng);
  std::vector<SupportEntry> entries;
  for (std::size_t i = 0; i < m; ++i) {
    entries.push_back({0, i + 1, Tensor::uniform({64}, -1.0, 1.0, rng, true)});
  }
  EncodedSupport enc = entries;
  ProjectedSupport ps = project_support(attn, enc);
  Tensor z = Tensor::uniform({32}, -1.0, 1.0, rng, true);
  AttentionConfig cfg;
  for (auto _ : state) {
    Tensor a = attend(ps, attn, z, cfg);
    benchmark::DoNotOptimize(a.data());
  }
}
BENCHMARK(bm_attend)->Arg(99)->Arg(297);

SeriesSet synthetic_task(std::uint64_t seed) {
  Rng rng(seed);
  SeriesSet s;
  s.name = "bench";
  s.series.resize(kSeriesPerTask);
  for (auto& row : s.series) {
    row.resize(kSeriesLength);
    double x = rng.normal();
    for (auto& v : row) {
      x = 0.8 * x + 0.2 * rng.normal();
      v = x;
    }
  }
  return s;
}

void bm_episode_loss(benchmark::State& state) {
  Rng rng(7);
  ModelConfig mc;
  ModelParams model = ModelParams::init(mc, rng);
  SeriesSet task = synthetic_task(11);
  Episode ep;
  ep.task = task.name;
  for (std::size_t i = 0; i < 3; ++i) ep.support.push_back(task.series[i]);
  for (std::size_t i = 3; i < 13; ++i) ep.query.push_back(task.series[i]);
  for (auto _ : state) {
    Tensor loss = episode_loss(model, ep, nullptr);
    backward(loss);
    benchmark::DoNotOptimize(loss.value());
  }
}
BENCHMARK(bm_episode_loss);

}  // namespace

BENCHMARK_MAIN();
