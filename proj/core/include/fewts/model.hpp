#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fewts/attention.hpp"
#include "fewts/lstm.hpp"
#include "fewts/rng.hpp"
#include "fewts/tensor.hpp"

namespace fewts {

struct ModelConfig {
  std::size_t hidden_fwd = 32;    // forward support encoder width
  std::size_t hidden_bwd = 32;    // backward support encoder width
  std::size_t hidden_query = 32;  // query encoder width (K_z)
  std::size_t k_a = 32;           // attention score width
  std::size_t k_v = 32;           // attention value width
  std::size_t head_hidden = 32;   // width of the two hidden head layers
  double dropout = 0.1;           // head-input dropout during training
  bool scale_scores = false;      // optional 1/sqrt(K_a) score scaling
  bool include_t1 = false;        // also predict x_1 from the zero state

  std::size_t k_h() const { return hidden_fwd + hidden_bwd; }

  std::string to_json() const;
  static ModelConfig from_json(const std::string& json_text);
};

// Three affine layers with ReLU between the hidden ones; scalar output.
// Shared with the feed-forward baseline.
struct HeadParams {
  Tensor w1, b1;  // [H x in], [H]
  Tensor w2, b2;  // [H x H],  [H]
  Tensor w3, b3;  // [1 x H],  [1]

  std::size_t in_dim() const { return w1.shape()[1]; }
  static HeadParams init(std::size_t in_dim, std::size_t hidden, Rng& rng);
  void append_params(NamedParams& out, const std::string& prefix) const;
};

/// Forward pass of the head. With a non-null rng, inverted-scaling dropout
/// at `dropout_rate` is applied to the inputs of both hidden layers
/// (training); with nullptr the head runs deterministically (evaluation).
Tensor head_forward(const HeadParams& head, const Tensor& in, double dropout_rate,
                    Rng* dropout_rng);

// The full forecasting function: bidirectional support encoder, query
// encoder, support attention, and head g predicting the next value.
struct ModelParams {
  ModelConfig config;
  LstmParams support_fwd;
  LstmParams support_bwd;
  LstmParams query_enc;
  AttentionParams attention;
  HeadParams head;

  static ModelParams init(const ModelConfig& cfg, Rng& rng);

  /// Stable-order view of every trainable tensor (shared buffers, not
  /// copies) -- the optimizer and the serializer both consume this.
  NamedParams parameters() const;
  std::size_t parameter_count() const;
  ModelParams clone() const;
  void check() const;

  void save(const std::filesystem::path& path) const;
  static ModelParams load(const std::filesystem::path& path);
};

// One few-shot episode: disjoint support and query series from one task.
struct Episode {
  std::string task;
  std::vector<std::vector<double>> support;
  std::vector<std::vector<double>> query;
};

/// Throws DataError when a series is shorter than 2 or a side is empty.
void check_episode(const Episode& ep);

/// Bidirectional encoding of every support series, tagged with (n, t).
EncodedSupport encode_support(const ModelParams& m, const std::vector<std::vector<double>>& support);

// Per-episode cache: encoded support plus its key/value projections,
// computed once and shared by every query position in the episode.
struct SupportContext {
  EncodedSupport enc;
  ProjectedSupport proj;
};

SupportContext build_support_context(const ModelParams& m,
                                     const std::vector<std::vector<double>>& support);

/// Next-value forecast from a nonempty prefix: z from the query encoder,
/// a = attend(z, support), output g([a, z]) as a one-element tensor.
Tensor forecast_next(const ModelParams& m, std::span<const double> prefix,
                     const SupportContext& ctx, Rng* dropout_rng = nullptr);

/// All teacher-forced predictions for one series in a single encoder pass:
/// one per t in 2..T (plus t=1 from the zero state when include_t1 is on).
std::vector<Tensor> forecast_series_nodes(const ModelParams& m, std::span<const double> series,
                                          const SupportContext& ctx, Rng* dropout_rng = nullptr);

/// forecast_series_nodes concatenated into one rank-1 tensor.
Tensor forecast_series_graph(const ModelParams& m, std::span<const double> series,
                             const SupportContext& ctx, Rng* dropout_rng = nullptr);

/// Evaluation path: no gradient recording, no dropout.
std::vector<double> forecast_series(const ModelParams& m, std::span<const double> series,
                                    const SupportContext& ctx);

/// The targets matching forecast_series outputs: x_2..x_T (x_1..x_T with
/// include_t1).
std::vector<double> forecast_targets(const ModelConfig& cfg, std::span<const double> series);

}  // namespace fewts
