#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fewts/rng.hpp"
#include "fewts/tensor.hpp"

namespace fewts {

// Standard LSTM cell parameters. Rows of the stacked matrices follow gate
// order input, forget, cell, output -- the convention every serialized
// archive relies on.
struct LstmParams {
  Tensor w_ih;  // [4H x I]
  Tensor w_hh;  // [4H x H]
  Tensor b;     // [4H]

  std::size_t hidden() const { return w_hh.shape()[1]; }
  std::size_t input_dim() const { return w_ih.shape()[1]; }

  /// Weights uniform in +-1/sqrt(H); forget-gate bias 1, other biases 0
  /// (stabilizes early training of long unrolls).
  static LstmParams init(std::size_t hidden, std::size_t input_dim, Rng& rng);

  void check() const;  // shape consistency + finiteness
  void append_params(NamedParams& out, const std::string& prefix) const;
};

struct LstmState {
  Tensor h;
  Tensor c;

  static LstmState zero(std::size_t hidden);
};

/// One recurrence: gates sigma/sigma/tanh/sigma of W_ih.x + W_hh.h + b;
/// c' = f*c + i*g; h' = o*tanh(c'). x is rank-1 of length input_dim.
LstmState lstm_step(const LstmParams& p, const LstmState& s, const Tensor& x);

/// Hidden states h_1..h_T of a univariate series from zero initial state.
/// Serves both the forward support encoder and the query encoder.
std::vector<Tensor> encode_forward(const LstmParams& p, std::span<const double> series);

/// Position t holds [forward h_t, backward h_t]; the backward recursion
/// starts from zero state past the end of the series.
std::vector<Tensor> encode_bidirectional(const LstmParams& fwd, const LstmParams& bwd,
                                         std::span<const double> series);

// One encoded support timestep: h is the concatenated bidirectional state
// of series `n` (0-based) at position `t` (0-based). A full support set is
// the flat list over all series and timesteps.
struct SupportEntry {
  std::size_t n;
  std::size_t t;
  Tensor h;  // [K_h]
};
using EncodedSupport = std::vector<SupportEntry>;

}  // namespace fewts
