#include "fewts/lstm.hpp"

#include <cmath>

#include "fewts/errors.hpp"

namespace fewts {

LstmParams LstmParams::init(std::size_t hidden, std::size_t input_dim, Rng& rng) {
  if (hidden == 0 || input_dim == 0) throw ConfigError("lstm: zero-sized cell");
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmParams p;
  p.w_ih = Tensor::uniform({4 * hidden, input_dim}, -bound, bound, rng);
  p.w_hh = Tensor::uniform({4 * hidden, hidden}, -bound, bound, rng);
  std::vector<double> bias(4 * hidden, 0.0);
  for (std::size_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;  // forget gate
  p.b = Tensor::from(std::move(bias), {4 * hidden}, /*requires_grad=*/true);
  return p;
}

void LstmParams::check() const {
  if (!w_ih.defined() || !w_hh.defined() || !b.defined()) {
    throw DimensionError("lstm: undefined parameter tensor");
  }
  const std::size_t h4 = w_ih.shape()[0];
  if (w_ih.rank() != 2 || w_hh.rank() != 2 || b.rank() != 1 || h4 % 4 != 0 ||
      w_hh.shape()[0] != h4 || w_hh.shape()[1] != h4 / 4 || b.shape()[0] != h4) {
    throw DimensionError("lstm: inconsistent parameter shapes " + shape_str(w_ih.shape()) + ", " +
                         shape_str(w_hh.shape()) + ", " + shape_str(b.shape()));
  }
  check_finite(w_ih, "lstm w_ih");
  check_finite(w_hh, "lstm w_hh");
  check_finite(b, "lstm b");
}

void LstmParams::append_params(NamedParams& out, const std::string& prefix) const {
  out.push_back({prefix + ".w_ih", w_ih});
  out.push_back({prefix + ".w_hh", w_hh});
  out.push_back({prefix + ".b", b});
}

LstmState LstmState::zero(std::size_t hidden) {
  return {Tensor::zeros({hidden}), Tensor::zeros({hidden})};
}

LstmState lstm_step(const LstmParams& p, const LstmState& s, const Tensor& x) {
  const std::size_t h = p.hidden();
  if (s.h.numel() != h || s.c.numel() != h) {
    throw DimensionError("lstm_step: state size " + std::to_string(s.h.numel()) +
                         " does not match hidden size " + std::to_string(h));
  }
  if (x.rank() != 1 || x.numel() != p.input_dim()) {
    throw DimensionError("lstm_step: input " + shape_str(x.shape()) + " does not match I=" +
                         std::to_string(p.input_dim()));
  }
  Tensor gates = matmul(p.w_ih, x) + matmul(p.w_hh, s.h) + p.b;  // [4H]
  Tensor i = sigmoid(slice(gates, 0, h));
  Tensor f = sigmoid(slice(gates, h, h));
  Tensor g = tanh(slice(gates, 2 * h, h));
  Tensor o = sigmoid(slice(gates, 3 * h, h));
  Tensor c = f * s.c + i * g;
  return {o * tanh(c), c};
}

std::vector<Tensor> encode_forward(const LstmParams& p, std::span<const double> series) {
  if (series.empty()) throw DimensionError("encode_forward: empty series");
  std::vector<Tensor> out;
  out.reserve(series.size());
  LstmState s = LstmState::zero(p.hidden());
  for (double x : series) {
    s = lstm_step(p, s, Tensor::from_vector({x}));
    out.push_back(s.h);
  }
  return out;
}

std::vector<Tensor> encode_bidirectional(const LstmParams& fwd, const LstmParams& bwd,
                                         std::span<const double> series) {
  if (series.empty()) throw DimensionError("encode_bidirectional: empty series");
  const std::size_t T = series.size();
  std::vector<Tensor> forward = encode_forward(fwd, series);
  std::vector<double> reversed(series.rbegin(), series.rend());
  std::vector<Tensor> backward_rev = encode_forward(bwd, reversed);
  std::vector<Tensor> out;
  out.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    out.push_back(concat({forward[t], backward_rev[T - 1 - t]}, 0));
  }
  return out;
}

}  // namespace fewts
