// Release checks: ten criteria, one verdict line each, nonzero exit on any
// failure. Heavier checks train small models, so the full run takes tens of
// minutes on one core.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fewts/baselines.hpp"
#include "fewts/harness.hpp"
#include "fewts/model.hpp"
#include "fewts/optim.hpp"
#include "fewts/trainer.hpp"
#include "fewts/util.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace fewts;
namespace fs = std::filesystem;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Verdict {
  enum class State { pass, fail, skip };
  State state = State::fail;
  std::string note;

  static Verdict pass(std::string note) { return {State::pass, std::move(note)}; }
  static Verdict fail(std::string note) { return {State::fail, std::move(note)}; }
  static Verdict skip(std::string note) { return {State::skip, std::move(note)}; }
};

struct Runner {
  int failures = 0;

  void run(int id, const std::string& name, const std::function<Verdict()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v = Verdict::fail("");
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = Verdict::fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = v.state == Verdict::State::pass   ? "[PASS]"
                      : v.state == Verdict::State::skip ? "[SKIP]"
                                                        : "[FAIL]";
    if (v.state == Verdict::State::fail) ++failures;
    std::printf("%s %02d %-22s %s  (%.1fs)\n", tag, id, name.c_str(), v.note.c_str(), secs);
    std::fflush(stdout);
  }

  int finish() const {
    std::printf("%s\n", failures ? "ACCEPTANCE: FAILED" : "ACCEPTANCE: OK");
    return failures ? 1 : 0;
  }
};

fs::path fresh_dir(const std::string& stem) {
  const fs::path dir = fs::temp_directory_path() / stem;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double signed_unit(Rng& rng) {
  const double mag = 0.3 + 0.7 * rng.real01();
  return rng.real01() < 0.5 ? -mag : mag;
}

Tensor rand_tensor(Shape shape, Rng& rng) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = signed_unit(rng);
  return Tensor::from(std::move(data), std::move(shape), /*requires_grad=*/true);
}

// Max relative error between backward() gradients and central differences,
// over every entry of every listed input. scalar_fn rebuilds the graph.
double grad_vs_fd(std::vector<Tensor> inputs, const std::function<Tensor()>& scalar_fn) {
  for (auto& t : inputs) t.zero_grad();
  backward(scalar_fn());
  double worst = 0.0;
  const double h = 1e-6;
  for (auto& t : inputs) {
    const std::vector<double> grads = to_vec(t.grad());
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double orig = t.data()[i];
      NoGradGuard guard;
      t.data_mut()[i] = orig + h;
      const double up = scalar_fn().value();
      t.data_mut()[i] = orig - h;
      const double dn = scalar_fn().value();
      t.data_mut()[i] = orig;
      worst = std::max(worst, oracle::rel_err(grads[i], (up - dn) / (2.0 * h)));
    }
  }
  return worst;
}

// --- criterion 1: gradients --------------------------------------------------

double primitive_gradient_sweep() {
  Rng rng(101);
  double worst = 0.0;
  auto check = [&](std::vector<Tensor> inputs, const std::function<Tensor()>& fn) {
    worst = std::max(worst, grad_vs_fd(std::move(inputs), fn));
  };

  {
    Tensor a = rand_tensor({2, 3}, rng), b = rand_tensor({2, 3}, rng);
    Tensor tgt = rand_tensor({2, 3}, rng);
    check({a, b}, [=] { return mse(add(a, b), tgt); });
    check({a, b}, [=] { return mse(sub(a, b), tgt); });
    check({a, b}, [=] { return mse(mul(a, b), tgt); });
    check({a}, [=] { return mse(add(a, 0.7), tgt); });
    check({a}, [=] { return mse(mul(a, -1.3), tgt); });
  }
  {
    Tensor s = rand_tensor({}, rng);
    Tensor m = rand_tensor({2, 2}, rng), tgt = rand_tensor({2, 2}, rng);
    check({s, m}, [=] { return mse(mul(s, m), tgt); });
    check({s, m}, [=] { return mse(add(s, m), tgt); });
  }
  {
    Tensor x = rand_tensor({5}, rng), tgt = rand_tensor({5}, rng);
    check({x}, [=] { return mse(fewts::tanh(x), tgt); });
    check({x}, [=] { return mse(sigmoid(x), tgt); });
    check({x}, [=] { return mse(relu(x), tgt); });  // inputs bounded off zero
    check({x}, [=] { return mse(fewts::exp(x), tgt); });
    check({x}, [=] { return sum(x); });
    check({x}, [=] { return mean(x); });
    check({x}, [=] {
      Rng mask(7);
      return mean(dropout(x, 0.3, mask));
    });
  }
  {
    Tensor a = rand_tensor({3, 4}, rng), b = rand_tensor({4, 2}, rng);
    Tensor tgt = rand_tensor({3, 2}, rng);
    check({a, b}, [=] { return mse(matmul(a, b), tgt); });
    Tensor v = rand_tensor({4}, rng), vt = rand_tensor({3}, rng);
    check({a, v}, [=] { return mse(matmul(a, v), vt); });
    Tensor tt = rand_tensor({4, 3}, rng);
    check({a}, [=] { return mse(transpose(a), tt); });
    check({a}, [=] { return mse(reshape(a, {12}), reshape(tt, {12})); });
  }
  {
    Tensor a = rand_tensor({3}, rng), b = rand_tensor({2}, rng);
    Tensor tgt = rand_tensor({5}, rng);
    check({a, b}, [=] { return mse(concat({a, b}, 0), tgt); });
    Tensor m1 = rand_tensor({2, 2}, rng), m2 = rand_tensor({2, 3}, rng);
    Tensor mt = rand_tensor({2, 5}, rng);
    check({m1, m2}, [=] { return mse(concat({m1, m2}, 1), mt); });
    Tensor r1 = rand_tensor({4}, rng), r2 = rand_tensor({4}, rng), r3 = rand_tensor({4}, rng);
    Tensor st = rand_tensor({3, 4}, rng);
    check({r1, r2, r3}, [=] { return mse(stack_rows({r1, r2, r3}), st); });
    Tensor v = rand_tensor({8}, rng), slt = rand_tensor({4}, rng);
    check({v}, [=] { return mse(slice(v, 2, 4), slt); });
  }
  {
    Tensor scores = rand_tensor({4}, rng);
    Tensor values = rand_tensor({4, 3}, rng);
    Tensor tgt = rand_tensor({3}, rng);
    check({scores, values}, [=] { return mse(softmax_weighted_sum(scores, values), tgt); });
    Tensor p = rand_tensor({6}, rng), t = rand_tensor({6}, rng);
    check({p, t}, [=] { return mse(p, t); });
  }
  return worst;
}

Verdict criterion_gradients() {
  const double primitive_worst = primitive_gradient_sweep();

  // composed loss on the micro model: H=3, K_a=K_v=2, N_S=2, T=6
  ModelConfig mc;
  mc.hidden_fwd = 3;
  mc.hidden_bwd = 3;
  mc.hidden_query = 3;
  mc.k_a = 2;
  mc.k_v = 2;
  mc.head_hidden = 4;
  mc.dropout = 0.0;
  Rng rng(103);
  ModelParams m = ModelParams::init(mc, rng);
  Episode ep;
  ep.task = "micro";
  for (int s = 0; s < 2; ++s) {
    std::vector<double> series(6);
    for (auto& v : series) v = rng.normal();
    ep.support.push_back(series);
  }
  for (int q = 0; q < 3; ++q) {
    std::vector<double> series(6);
    for (auto& v : series) v = rng.normal();
    ep.query.push_back(series);
  }
  std::vector<Tensor> params;
  for (const auto& nt : m.parameters()) params.push_back(nt.tensor);
  const double composed_worst =
      grad_vs_fd(params, [&] { return episode_loss(m, ep, nullptr); });

  const bool ok = primitive_worst < 1e-6 && composed_worst < 1e-4;
  const std::string note = "primitive max rel err " + num(primitive_worst) +
                           " (tol 1e-6); composed micro-model " + num(composed_worst) +
                           " (tol 1e-4)";
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

// --- criterion 2: oracle equivalence -------------------------------------------

oracle::LstmWeights lift(const LstmParams& p) {
  oracle::LstmWeights w;
  w.hidden = p.hidden();
  w.input = p.input_dim();
  w.w_ih = to_vec(p.w_ih.data());
  w.w_hh = to_vec(p.w_hh.data());
  w.b = to_vec(p.b.data());
  return w;
}

Verdict criterion_oracles() {
  Rng rng(211);
  double worst = 0.0;
  auto track = [&](double got, double want) {
    worst = std::max(worst, std::fabs(got - want));
  };

  for (int i = 0; i < 100; ++i) {  // one recurrence step
    const std::size_t h = 1 + rng.below(8);
    LstmParams p = LstmParams::init(h, 1, rng);
    LstmState s{rand_tensor({h}, rng), rand_tensor({h}, rng)};
    const double x = rng.normal();
    LstmState out = lstm_step(p, s, Tensor::from_vector({x}));
    oracle::LstmRefState ref{to_vec(s.h.data()), to_vec(s.c.data())};
    oracle::LstmRefState want = oracle::lstm_step(lift(p), ref, x);
    for (std::size_t j = 0; j < h; ++j) {
      track(out.h.data()[j], want.h[j]);
      track(out.c.data()[j], want.c[j]);
    }
  }

  for (int i = 0; i < 100; ++i) {  // bidirectional encodings
    const std::size_t h = 2 + rng.below(4);
    LstmParams fwd = LstmParams::init(h, 1, rng);
    LstmParams bwd = LstmParams::init(h, 1, rng);
    std::vector<double> xs(1 + rng.below(12));
    for (auto& v : xs) v = rng.normal();
    const auto enc = encode_bidirectional(fwd, bwd, xs);
    const auto want = oracle::encode_bidirectional(lift(fwd), lift(bwd), xs);
    for (std::size_t t = 0; t < xs.size(); ++t) {
      for (std::size_t j = 0; j < 2 * h; ++j) track(enc[t].data()[j], want[t][j]);
    }
  }

  for (int i = 0; i < 100; ++i) {  // attention
    const std::size_t ka = 1 + rng.below(4), kv = 1 + rng.below(4);
    const std::size_t kz = 1 + rng.below(4), kh = 1 + rng.below(5);
    AttentionParams p = AttentionParams::init(ka, kv, kz, kh, rng);
    const std::size_t m = 1 + rng.below(30);
    EncodedSupport enc;
    std::vector<std::vector<double>> entries;
    for (std::size_t e = 0; e < m; ++e) {
      Tensor ht = rand_tensor({kh}, rng);
      entries.push_back(to_vec(ht.data()));
      enc.push_back({e, 0, ht});
    }
    Tensor z = rand_tensor({kz}, rng);
    const bool scale = (i % 2) == 1;
    Tensor a = attend(p, z, enc, {.scale_scores = scale});
    const auto want = oracle::attend(ka, kv, kz, kh, to_vec(p.q.data()), to_vec(p.k.data()),
                                     to_vec(p.v.data()), to_vec(z.data()), entries, scale);
    for (std::size_t j = 0; j < kv; ++j) track(a.data()[j], want[j]);
  }

  for (int i = 0; i < 100; ++i) {  // the composed forecast
    ModelConfig mc;
    mc.hidden_fwd = mc.hidden_bwd = mc.hidden_query = 2 + rng.below(2);
    mc.k_a = mc.k_v = 2;
    mc.head_hidden = 3;
    mc.dropout = 0.0;
    mc.scale_scores = (i % 2) == 1;
    ModelParams m = ModelParams::init(mc, rng);
    std::vector<std::vector<double>> support(1 + rng.below(3));
    for (auto& s : support) {
      s.resize(2 + rng.below(4));
      for (auto& v : s) v = rng.normal();
    }
    std::vector<double> prefix(1 + rng.below(5));
    for (auto& v : prefix) v = rng.normal();
    const auto ctx = build_support_context(m, support);
    const double got = forecast_next(m, prefix, ctx).value();
    const double want = oracle::forecast_next(oracle::extract(m), prefix, support);
    track(got, want);
  }

  const bool ok = worst < 1e-10;
  const std::string note =
      "4 x 100 random instances, max abs deviation " + num(worst) + " (tol 1e-10)";
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

// --- criterion 3: attention invariants -----------------------------------------

Verdict criterion_attention() {
  Rng rng(307);
  double worst_sum = 0.0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t kh = 2 + rng.below(4);
    AttentionParams p = AttentionParams::init(3, 3, 3, kh, rng);
    EncodedSupport enc;
    const std::size_t m = 1 + rng.below(12);
    for (std::size_t e = 0; e < m; ++e) enc.push_back({e, 0, rand_tensor({kh}, rng)});
    Tensor z = rand_tensor({3}, rng);
    double total = 0.0;
    for (const auto& [n, t, w] : attention_weights(p, z, enc)) total += w;
    worst_sum = std::max(worst_sum, std::fabs(total - 1.0));
  }

  double worst_perm = 0.0;
  for (int i = 0; i < 5; ++i) {
    ModelConfig mc;
    mc.hidden_fwd = mc.hidden_bwd = mc.hidden_query = 3;
    mc.k_a = mc.k_v = 2;
    mc.head_hidden = 4;
    ModelParams m = ModelParams::init(mc, rng);
    std::vector<std::vector<double>> support(4);
    for (auto& s : support) {
      s.resize(5);
      for (auto& v : s) v = rng.normal();
    }
    std::vector<double> prefix{rng.normal(), rng.normal(), rng.normal()};
    const double base = forecast_next(m, prefix, build_support_context(m, support)).value();
    std::rotate(support.begin(), support.begin() + 1, support.end());
    std::swap(support[0], support[2]);
    const double moved = forecast_next(m, prefix, build_support_context(m, support)).value();
    worst_perm = std::max(worst_perm, std::fabs(base - moved));
  }

  bool sizes_ok = true;
  {
    AttentionParams p = AttentionParams::init(4, 4, 4, 6, rng);
    Tensor z = rand_tensor({4}, rng);
    for (std::size_t m : {1u, 3u, 10u}) {
      EncodedSupport enc;
      for (std::size_t e = 0; e < m; ++e) enc.push_back({e, 0, rand_tensor({6}, rng)});
      Tensor a = attend(p, z, enc);
      for (double v : a.data()) sizes_ok = sizes_ok && std::isfinite(v);
    }
  }

  const bool ok = worst_sum <= 1e-12 && worst_perm < 1e-12 && sizes_ok;
  const std::string note = "weight sum off by " + num(worst_sum) +
                           " (tol 1e-12); permutation shift " + num(worst_perm) +
                           " (tol 1e-12); sizes {1,3,10} " + (sizes_ok ? "ok" : "BROKEN");
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

// --- criterion 4: trainer sanity ------------------------------------------------

Verdict criterion_trainer() {
  const auto train_tasks = synth::make_corpus(6, 777, 16, 40);
  const auto val_tasks = synth::make_corpus(6, 888, 16, 40);
  const auto held_out = synth::make_corpus(6, 999, 16, 40);

  ModelConfig mc;
  mc.hidden_fwd = mc.hidden_bwd = mc.hidden_query = 16;
  mc.k_a = mc.k_v = 8;
  mc.head_hidden = 16;

  TrainConfig tc;
  tc.n_support = 3;
  tc.n_query = 8;
  tc.max_epochs = 80;
  tc.patience = 15;
  tc.seed = 1;

  TrainResult r = train(mc, train_tasks, val_tasks, tc);
  const double first = r.history.front().val_loss;
  const double best = r.best_val_loss;
  const bool halved = best <= 0.5 * first;

  auto ours = make_ours_forecaster(r.best.clone());
  auto pre = make_pre_forecaster();
  int wins = 0;
  for (const auto& task : held_out) {
    const double ours_rmse = evaluate_task(*ours, task, 3, 0);
    const double pre_rmse = evaluate_task(*pre, task, 3, 0);
    if (ours_rmse < pre_rmse) ++wins;
  }

  const bool ok = halved && wins >= 5;
  const std::string note = "val loss " + num(first) + " -> " + num(best) +
                           (halved ? " (>=50% drop)" : " (NO 50% drop)") + "; beats pre on " +
                           std::to_string(wins) + "/6 held-out tasks (need >=5)";
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

// --- criteria 5-7 share one desk-scale run --------------------------------------

struct DeskRun {
  std::vector<SeriesSet> corpus;                 // 15 tasks, canonical size
  std::vector<std::uint64_t> seeds;              // {0, 1}
  std::vector<std::vector<SeriesSet>> targets;   // per seed
  std::vector<ModelParams> ours;                 // per seed, best checkpoint
  std::vector<BaseParams> di;                    // per seed, best checkpoint
};

std::optional<DeskRun> g_desk;

void build_desk_run() {
  DeskRun desk;
  desk.corpus = synth::make_corpus(15, 4242, kSeriesPerTask, kSeriesLength);
  desk.seeds = {0, 1};

  for (const std::uint64_t seed : desk.seeds) {
    std::vector<std::size_t> order(desk.corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(derive_seed(seed, "desk-split"));
    split_rng.shuffle(order);

    std::vector<SeriesSet> train_tasks, val_tasks, target_tasks;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const SeriesSet& task = desk.corpus[order[i]];
      if (i < 9) {
        train_tasks.push_back(task);
      } else if (i < 11) {
        val_tasks.push_back(task);
      } else {
        target_tasks.push_back(task);
      }
    }

    ModelConfig mc;  // stock architecture
    TrainConfig tc;
    tc.n_support = 3;
    tc.n_query = 12;
    tc.max_epochs = 40;
    tc.patience = 10;
    tc.seed = seed;
    TrainResult ours = train(mc, train_tasks, val_tasks, tc);

    BaselineConfig bc;
    bc.base = BaseKind::lstm;
    bc.max_epochs = 25;
    bc.patience = 6;
    bc.seed = seed;
    BaselineTrainResult di = train_di(train_tasks, val_tasks, bc);

    desk.targets.push_back(std::move(target_tasks));
    desk.ours.push_back(ours.best.clone());
    desk.di.push_back(di.best.clone());
  }
  g_desk = std::move(desk);
}

Verdict criterion_desk_trend() {
  build_desk_run();
  const DeskRun& desk = *g_desk;

  double ours_total = 0.0, di_total = 0.0, pre_total = 0.0;
  std::size_t di_beaten_seeds = 0;
  std::ostringstream detail;
  for (std::size_t si = 0; si < desk.seeds.size(); ++si) {
    const std::uint64_t seed = desk.seeds[si];
    auto ours = make_ours_forecaster(desk.ours[si].clone());
    auto di = make_di_forecaster("di-lstm", desk.di[si].clone());
    auto pre = make_pre_forecaster();
    double ours_mean = 0.0, di_mean = 0.0, pre_mean = 0.0;
    for (const auto& task : desk.targets[si]) {
      ours_mean += evaluate_task(*ours, task, 3, seed);
      di_mean += evaluate_task(*di, task, 3, seed);
      pre_mean += evaluate_task(*pre, task, 3, seed);
    }
    const double n = static_cast<double>(desk.targets[si].size());
    ours_mean /= n;
    di_mean /= n;
    pre_mean /= n;
    ours_total += ours_mean;
    di_total += di_mean;
    pre_total += pre_mean;
    if (ours_mean <= di_mean) ++di_beaten_seeds;
    detail << " seed" << seed << ": ours " << num(ours_mean) << ", di-lstm " << num(di_mean)
           << ", pre " << num(pre_mean) << ";";
  }
  ours_total /= 2.0;
  di_total /= 2.0;
  pre_total /= 2.0;

  const bool ok = ours_total <= pre_total && di_beaten_seeds >= 1;
  const std::string note = "mean RMSE ours " + num(ours_total) + " vs pre " + num(pre_total) +
                           " (must not exceed); <= di-lstm in " +
                           std::to_string(di_beaten_seeds) + "/2 seeds (need >=1);" +
                           detail.str();
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

Verdict criterion_support_sweep() {
  if (!g_desk) return Verdict::fail("desk run unavailable (criterion 5 crashed)");
  const DeskRun& desk = *g_desk;

  double rmse1 = 0.0, rmse5 = 0.0;
  std::size_t cells = 0;
  for (std::size_t si = 0; si < desk.seeds.size(); ++si) {
    auto ours = make_ours_forecaster(desk.ours[si].clone());
    for (const auto& task : desk.targets[si]) {
      rmse1 += evaluate_task(*ours, task, 1, desk.seeds[si]);
      rmse5 += evaluate_task(*ours, task, 5, desk.seeds[si]);
      ++cells;
    }
  }
  rmse1 /= static_cast<double>(cells);
  rmse5 /= static_cast<double>(cells);

  const bool ok = rmse5 <= rmse1 * 1.05;
  const std::string note = "mean RMSE at support 5 " + num(rmse5) + " vs support 1 " + num(rmse1) +
                           " (tol: 5 <= 1.05 x 1)";
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

Verdict criterion_baseline_exactness() {
  if (!g_desk) return Verdict::fail("desk run unavailable (criterion 5 crashed)");

  // persistence must equal the direct computation bit for bit, replaying
  // the harness's support draw and accumulation order
  std::size_t mismatches = 0;
  auto pre = make_pre_forecaster();
  for (const std::uint64_t seed : {0ull, 1ull}) {
    for (const auto& task : g_desk->corpus) {
      const double harness_rmse = evaluate_task(*pre, task, 3, seed);

      Rng rng(derive_seed(seed, "support:" + task.name));
      const auto pick = rng.sample_without_replacement(task.series.size(), 3);
      std::vector<bool> in_support(task.series.size(), false);
      for (std::size_t idx : pick) in_support[idx] = true;
      double acc = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < task.series.size(); ++i) {
        if (in_support[i]) continue;
        const auto& s = task.series[i];
        for (std::size_t t = 0; t + 1 < s.size(); ++t) {
          const double d = s[t] - s[t + 1];
          acc += d * d;
        }
        count += s.size() - 1;
      }
      const double direct = std::sqrt(acc / static_cast<double>(count));
      if (harness_rmse != direct) ++mismatches;
    }
  }

  // closed-form least squares on an analytic fixture:
  // lag pairs (0,1) (1,2) (1,3) (3,5) -> w = 25/19, b = 21/19
  BaselineConfig cfg;
  cfg.base = BaseKind::linear;
  BaseParams fit = train_ds({{0.0, 1.0, 2.0}, {1.0, 3.0, 5.0}}, cfg);
  const double w_err = std::fabs(fit.lin_w.value() - 25.0 / 19.0);
  const double b_err = std::fabs(fit.lin_b.value() - 21.0 / 19.0);

  const bool ok = mismatches == 0 && w_err < 1e-6 && b_err < 1e-6;
  const std::string note = "pre bit-exact on " + std::to_string(2 * g_desk->corpus.size()) +
                           "/30 (task, seed) cells with " + std::to_string(mismatches) +
                           " mismatches; linear-DS off closed form by " + num(std::max(w_err, b_err)) +
                           " (tol 1e-6)";
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

// --- criterion 8: the MAML contract ----------------------------------------------

Verdict criterion_maml() {
  // A: a zero inner rate must reproduce a no-adaptation episodic loop bit
  // for bit, under the identical seed streams.
  const auto tasks = synth::make_corpus(4, 1234, 12, 20);
  BaselineConfig cfg;
  cfg.base = BaseKind::linear;
  cfg.inner_lr = 0.0;
  cfg.inner_epochs = 5;
  cfg.n_support = 3;
  cfg.n_query = 4;
  cfg.max_epochs = 6;
  cfg.patience = 6;
  cfg.seed = 3;

  BaselineTrainResult maml = train_maml(tasks, tasks, cfg);

  std::vector<double> reference;
  {
    Rng init_rng(derive_seed(cfg.seed, "init"));
    Rng episode_rng(derive_seed(cfg.seed, "episodes"));
    BaseParams params = BaseParams::init(cfg.base, cfg.hidden, init_rng);
    Adam opt(params.parameters(), {.lr = cfg.lr});
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        const SeriesSet& task = tasks[episode_rng.below(tasks.size())];
        Episode ep = sample_episode(task, cfg.n_support, cfg.n_query, episode_rng);
        Tensor loss = base_set_loss(params, ep.query);
        reference.push_back(loss.value());
        opt.zero_grad();
        backward(loss);
        NamedParams view = params.parameters();
        clip_global_norm(view, cfg.clip_norm);
        opt.step();
      }
    }
  }
  const bool bitwise = maml.episode_query_losses == reference;

  // B: after real meta-training, adaptation helps on nearly every episode
  const auto corpus = synth::make_corpus(8, 555, 16, 40);
  const std::vector<SeriesSet> train_tasks(corpus.begin(), corpus.begin() + 6);
  const std::vector<SeriesSet> val_tasks(corpus.begin() + 6, corpus.end());
  const auto held_out = synth::make_corpus(8, 666, 16, 40);

  BaselineConfig mcfg;
  mcfg.base = BaseKind::linear;
  mcfg.inner_lr = 1e-3;
  mcfg.inner_epochs = 5;
  mcfg.n_support = 3;
  mcfg.n_query = 8;
  mcfg.max_epochs = 30;
  mcfg.patience = 30;
  mcfg.seed = 5;
  BaselineTrainResult trained = train_maml(train_tasks, val_tasks, mcfg);

  Rng ep_rng(808);
  std::size_t improved = 0;
  const std::size_t episodes = 40;
  for (std::size_t i = 0; i < episodes; ++i) {
    const SeriesSet& task = held_out[i % held_out.size()];
    Episode ep = sample_episode(task, 3, 8, ep_rng);
    double before = 0.0;
    {
      NoGradGuard no_grad;
      before = base_set_loss(trained.best, ep.support).value();
    }
    BaseParams adapted = maml_adapt(trained.best, ep.support, mcfg);
    double after = 0.0;
    {
      NoGradGuard no_grad;
      after = base_set_loss(adapted, ep.support).value();
    }
    if (after < before) ++improved;
  }

  const bool helps = improved * 100 >= episodes * 95;
  const bool ok = bitwise && helps;
  const std::string note =
      std::string("zero-rate losses ") + (bitwise ? "bitwise equal" : "DIVERGED") +
      " over 24 episodes; adaptation improved " + std::to_string(improved) + "/" +
      std::to_string(episodes) + " test episodes (need >=95%)";
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

// --- criterion 9: manifest determinism -------------------------------------------

Verdict criterion_determinism() {
  const fs::path data = fresh_dir("fewts_acc_det_data");
  write_prepared_dir(data, synth::make_corpus(4, 99, kSeriesPerTask, kSeriesLength), 99);

  ExperimentConfig cfg;
  cfg.prepared_dir = data;
  cfg.output_dir = fresh_dir("fewts_acc_det_run1");
  cfg.methods = {"pre", "ds-linear", "di-linear"};
  cfg.seeds = {0};
  cfg.baseline.max_epochs = 8;
  cfg.baseline.patience = 8;
  run_experiment(cfg);

  ExperimentConfig replay = ExperimentConfig::from_json_file(cfg.output_dir / "manifest.json");
  replay.output_dir = fresh_dir("fewts_acc_det_run2");
  run_experiment(replay);

  const std::string a = read_text_file(cfg.output_dir / "results.csv");
  const std::string b = read_text_file(replay.output_dir / "results.csv");
  const std::string ra = read_text_file(cfg.output_dir / "results_raw.csv");
  const std::string rb = read_text_file(replay.output_dir / "results_raw.csv");

  const bool ok = a == b && ra == rb;
  const std::string note = std::string("manifest replay: results.csv ") +
                           (a == b ? "byte-identical" : "DIFFERS") + ", results_raw.csv " +
                           (ra == rb ? "byte-identical" : "DIFFERS");
  return ok ? Verdict::pass(note) : Verdict::fail(note);
}

// --- criterion 10: data pipeline ---------------------------------------------------

Verdict criterion_data_pipeline() {
  const char* root_env = std::getenv("FEWTS_UCR_ROOT");
  if (root_env != nullptr && fs::is_directory(root_env)) {
    const fs::path root(root_env);
    std::vector<RawTask> tasks;
    for (const auto& name : list_archive_tasks(root)) {
      tasks.push_back(load_archive_task(root, name));
    }
    const auto kept = filter_tasks(std::move(tasks));
    std::size_t prepared_ok = 0;
    for (const auto& t : kept) {
      SeriesSet set = prepare_task(t, 0);
      set.check();  // 50 x 100, pooled mean/var 0/1 within 1e-9
      ++prepared_ok;
    }
    const bool ok = kept.size() == 90;
    const std::string note = "archive filter kept " + std::to_string(kept.size()) +
                             " tasks (need exactly 90); " + std::to_string(prepared_ok) +
                             " prepared tasks hold 50x100 mean/var 0/1 +-1e-9";
    return ok ? Verdict::pass(note) : Verdict::fail(note);
  }

  // No archive in this environment: exercise the identical pipeline on a
  // synthetic archive and report the 90-task count as unverifiable.
  const fs::path root = fresh_dir("fewts_acc_archive");
  synth::write_ucr_archive(root, 6, 31415, /*with_rejects=*/true);
  std::vector<RawTask> tasks;
  for (const auto& name : list_archive_tasks(root)) {
    tasks.push_back(load_archive_task(root, name));
  }
  const auto kept = filter_tasks(std::move(tasks));
  bool invariants = kept.size() == 6;  // the three seeded rejects must vanish
  for (const auto& t : kept) {
    SeriesSet set = prepare_task(t, 0);
    set.check();
    invariants = invariants && set.series.size() == kSeriesPerTask;
  }
  if (!invariants) {
    return Verdict::fail("surrogate archive: filter or preparation invariants broken");
  }
  return Verdict::skip(
      "FEWTS_UCR_ROOT not set; 90-task count unverifiable. Surrogate archive: filter kept "
      "6/9, every prepared task is 50x100 with pooled mean/var 0/1 +-1e-9");
}

}  // namespace

int main() {
  Runner r;
  r.run(1, "gradient-correctness", criterion_gradients);
  r.run(2, "oracle-equivalence", criterion_oracles);
  r.run(3, "attention-invariants", criterion_attention);
  r.run(4, "trainer-sanity", criterion_trainer);
  r.run(5, "desk-scale-trend", criterion_desk_trend);
  r.run(6, "support-size-trend", criterion_support_sweep);
  r.run(7, "baseline-exactness", criterion_baseline_exactness);
  r.run(8, "maml-contract", criterion_maml);
  r.run(9, "manifest-determinism", criterion_determinism);
  r.run(10, "data-pipeline", criterion_data_pipeline);
  return r.finish();
}
