#include "fewts/optim.hpp"

#include <cmath>

namespace fewts {

Adam::Adam(NamedParams params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  // Validate every gradient before touching any parameter, so a poisoned
  // gradient aborts the step without a partial update.
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam: poisoned gradient in parameter '" + p.name + "'");
      }
    }
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    NamedTensor& p = params_[pi];
    p.tensor.ensure_grad();
    const auto g = p.tensor.grad();
    auto w = p.tensor.data_mut();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double global_grad_norm(const NamedParams& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_global_norm(NamedParams& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (max_norm <= 0.0 || norm <= max_norm || norm == 0.0) return norm;
  const double scale = max_norm / norm;
  for (auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double& g : p.tensor.grad_mut()) g *= scale;
  }
  return norm;
}

}  // namespace fewts
