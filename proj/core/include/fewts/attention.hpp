#pragma once

#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include "fewts/lstm.hpp"
#include "fewts/rng.hpp"
#include "fewts/tensor.hpp"

namespace fewts {

// Single-head dot-product attention over encoded support states:
//   a = sum_{n,t} softmax((K h_nt)^T (Q z)) . V h_nt
// Scores are used exactly as written; the optional 1/sqrt(K_a) scaling is
// an ablation knob, off by default.
struct AttentionParams {
  Tensor q;  // [K_a x K_z]
  Tensor k;  // [K_a x K_h]
  Tensor v;  // [K_v x K_h]

  std::size_t k_a() const { return q.shape()[0]; }
  std::size_t k_v() const { return v.shape()[0]; }
  std::size_t k_z() const { return q.shape()[1]; }
  std::size_t k_h() const { return k.shape()[1]; }

  static AttentionParams init(std::size_t k_a, std::size_t k_v, std::size_t k_z, std::size_t k_h,
                              Rng& rng);
  void check() const;
  void append_params(NamedParams& out, const std::string& prefix) const;
};

struct AttentionConfig {
  bool scale_scores = false;  // multiply scores by 1/sqrt(K_a) when true
};

// Support projections computed once per episode and reused for every query
// position: keys = H.K^T, values = H.V^T where H stacks all h_nt rows.
struct ProjectedSupport {
  std::vector<std::pair<std::size_t, std::size_t>> index;  // (n, t) per row
  Tensor keys;    // [M x K_a]
  Tensor values;  // [M x K_v]

  std::size_t size() const { return index.size(); }
};

/// Throws EmptySupportError for an empty support set.
ProjectedSupport project_support(const AttentionParams& p, const EncodedSupport& support);

Tensor attend(const ProjectedSupport& ps, const AttentionParams& p, const Tensor& z,
              const AttentionConfig& cfg = {});
Tensor attend(const AttentionParams& p, const Tensor& z, const EncodedSupport& support,
              const AttentionConfig& cfg = {});

/// Diagnostic: the softmax weights in support order, as (n, t, weight).
/// Does not record gradients.
std::vector<std::tuple<std::size_t, std::size_t, double>> attention_weights(
    const AttentionParams& p, const Tensor& z, const EncodedSupport& support,
    const AttentionConfig& cfg = {});

}  // namespace fewts
