// Straight-loop reference implementations used to check the library.
// Everything here is plain doubles and std containers, written directly from
// the defining formulas; none of it calls into the library's math.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fewts/model.hpp"

namespace oracle {

double rel_err(double a, double b);

// Central finite differences d f / d x.
std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, double h = 1e-6);

// --- LSTM ---------------------------------------------------------------
// Row-major weights, gate order (input, forget, cell, output), as documented
// for the serialized format.
struct LstmWeights {
  std::size_t hidden = 0;
  std::size_t input = 0;
  std::vector<double> w_ih;  // [4H x I]
  std::vector<double> w_hh;  // [4H x H]
  std::vector<double> b;     // [4H]
};

struct LstmRefState {
  std::vector<double> h, c;
};

LstmRefState lstm_step(const LstmWeights& w, const LstmRefState& s, double x);
std::vector<LstmRefState> encode_forward(const LstmWeights& w, const std::vector<double>& xs);
// Position t holds [forward h_t, backward h_t].
std::vector<std::vector<double>> encode_bidirectional(const LstmWeights& fw,
                                                      const LstmWeights& bw,
                                                      const std::vector<double>& xs);

// --- attention ------------------------------------------------------------
std::vector<double> softmax(const std::vector<double>& scores);

// a = sum_i softmax((K h_i)^T (Q z))_i * V h_i, double loops throughout.
std::vector<double> attend(std::size_t ka, std::size_t kv, std::size_t kz, std::size_t kh,
                           const std::vector<double>& q, const std::vector<double>& k,
                           const std::vector<double>& v, const std::vector<double>& z,
                           const std::vector<std::vector<double>>& entries, bool scale);

// --- head -------------------------------------------------------------------
struct HeadWeights {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::vector<double> w1, b1, w2, b2, w3, b3;
};

double head(const HeadWeights& w, const std::vector<double>& input);

// --- composed model ---------------------------------------------------------
struct ModelWeights {
  LstmWeights fwd, bwd, query;
  std::size_t ka = 0, kv = 0, kz = 0, kh = 0;
  std::vector<double> q, k, v;
  HeadWeights head_w;
  bool scale = false;
};

// Copies the values out of a trained/initialized parameter set. Uses only
// public accessors; the math above never touches library code.
ModelWeights extract(const fewts::ModelParams& params);

double forecast_next(const ModelWeights& w, const std::vector<double>& prefix,
                     const std::vector<std::vector<double>>& support);
std::vector<double> forecast_series(const ModelWeights& w, const std::vector<double>& series,
                                    const std::vector<std::vector<double>>& support);

}  // namespace oracle
