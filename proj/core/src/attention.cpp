#include "fewts/attention.hpp"

#include <cmath>

#include "fewts/errors.hpp"

namespace fewts {

AttentionParams AttentionParams::init(std::size_t k_a, std::size_t k_v, std::size_t k_z,
                                      std::size_t k_h, Rng& rng) {
  if (k_a == 0 || k_v == 0 || k_z == 0 || k_h == 0) {
    throw ConfigError("attention: zero-sized projection");
  }
  AttentionParams p;
  const double bq = 1.0 / std::sqrt(static_cast<double>(k_z));
  const double bkv = 1.0 / std::sqrt(static_cast<double>(k_h));
  p.q = Tensor::uniform({k_a, k_z}, -bq, bq, rng);
  p.k = Tensor::uniform({k_a, k_h}, -bkv, bkv, rng);
  p.v = Tensor::uniform({k_v, k_h}, -bkv, bkv, rng);
  return p;
}

void AttentionParams::check() const {
  if (!q.defined() || !k.defined() || !v.defined() || q.rank() != 2 || k.rank() != 2 ||
      v.rank() != 2 || q.shape()[0] != k.shape()[0] || k.shape()[1] != v.shape()[1]) {
    throw DimensionError("attention: inconsistent projection shapes");
  }
  check_finite(q, "attention Q");
  check_finite(k, "attention K");
  check_finite(v, "attention V");
}

void AttentionParams::append_params(NamedParams& out, const std::string& prefix) const {
  out.push_back({prefix + ".q", q});
  out.push_back({prefix + ".k", k});
  out.push_back({prefix + ".v", v});
}

ProjectedSupport project_support(const AttentionParams& p, const EncodedSupport& support) {
  if (support.empty()) throw EmptySupportError("attend: empty support set");
  ProjectedSupport ps;
  ps.index.reserve(support.size());
  std::vector<Tensor> rows;
  rows.reserve(support.size());
  for (const SupportEntry& e : support) {
    if (e.h.rank() != 1 || e.h.numel() != p.k_h()) {
      throw DimensionError("attend: support state " + shape_str(e.h.shape()) +
                           " does not match K_h=" + std::to_string(p.k_h()));
    }
    ps.index.emplace_back(e.n, e.t);
    rows.push_back(e.h);
  }
  Tensor h = stack_rows(rows);              // [M x K_h]
  ps.keys = matmul(h, transpose(p.k));      // [M x K_a]
  ps.values = matmul(h, transpose(p.v));    // [M x K_v]
  return ps;
}

Tensor attend(const ProjectedSupport& ps, const AttentionParams& p, const Tensor& z,
              const AttentionConfig& cfg) {
  if (ps.size() == 0) throw EmptySupportError("attend: empty support set");
  if (z.rank() != 1 || z.numel() != p.k_z()) {
    throw DimensionError("attend: query state " + shape_str(z.shape()) + " does not match K_z=" +
                         std::to_string(p.k_z()));
  }
  Tensor qz = matmul(p.q, z);            // [K_a]
  Tensor scores = matmul(ps.keys, qz);   // [M]
  if (cfg.scale_scores) scores = mul(scores, 1.0 / std::sqrt(static_cast<double>(p.k_a())));
  return softmax_weighted_sum(scores, ps.values);
}

Tensor attend(const AttentionParams& p, const Tensor& z, const EncodedSupport& support,
              const AttentionConfig& cfg) {
  return attend(project_support(p, support), p, z, cfg);
}

std::vector<std::tuple<std::size_t, std::size_t, double>> attention_weights(
    const AttentionParams& p, const Tensor& z, const EncodedSupport& support,
    const AttentionConfig& cfg) {
  if (support.empty()) throw EmptySupportError("attention_weights: empty support set");
  NoGradGuard no_grad;
  ProjectedSupport ps = project_support(p, support);
  Tensor qz = matmul(p.q, z);
  Tensor scores = matmul(ps.keys, qz);
  if (cfg.scale_scores) scores = mul(scores, 1.0 / std::sqrt(static_cast<double>(p.k_a())));
  std::vector<double> w = softmax_weights(scores.data());
  std::vector<std::tuple<std::size_t, std::size_t, double>> out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.emplace_back(ps.index[i].first, ps.index[i].second, w[i]);
  }
  return out;
}

}  // namespace fewts
