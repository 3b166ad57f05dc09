#pragma once

#include <cstddef>
#include <vector>

#include "fewts/tensor.hpp"

namespace fewts {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a fixed set of named parameters. The
// optimizer reads each tensor's accumulated gradient at step() time; a NaN
// or infinite gradient aborts the step and names the offending parameter.
class Adam {
 public:
  explicit Adam(NamedParams params, AdamConfig cfg = {});

  void step();
  void zero_grad();

  std::size_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const NamedParams& params() const { return params_; }

 private:
  NamedParams params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

/// L2 norm of all gradients concatenated. Parameters whose gradient buffer
/// was never allocated count as zero.
double global_grad_norm(const NamedParams& params);

/// Scales every gradient by max_norm/norm when the global norm exceeds
/// max_norm. Returns the pre-clip norm. max_norm <= 0 disables clipping.
double clip_global_norm(NamedParams& params, double max_norm);

}  // namespace fewts
