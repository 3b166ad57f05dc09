#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fewts/errors.hpp"
#include "fewts/rng.hpp"

namespace fewts {

using Shape = std::vector<std::size_t>;

namespace detail {

// One vertex of the dynamic computation graph. Interior nodes carry the
// closure that pushes their output gradient back to their parents; leaves
// (parameters, constants) carry none. The graph is whatever set of nodes is
// reachable from a root through parent links -- it is built as ops execute
// and torn down when the owning tensors go out of scope.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily by backward()
  bool requires_grad = false;
  bool interior = false;  // produced by a recorded op
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  ~Node();  // iterative teardown; deep graphs must not recurse

  std::size_t numel() const { return data.size(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// Gradient recording is on by default and confined to the current thread.
// Instantiate a NoGradGuard around pure-inference code to skip taping.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Dense row-major 64-bit float tensor (rank 0, 1, or 2 in practice).
// Copying a Tensor copies the handle, not the buffer; ops on tensors that
// require gradients record themselves for reverse-mode differentiation.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from(std::vector<double> data, Shape shape, bool requires_grad = false);
  static Tensor from_vector(std::vector<double> data, bool requires_grad = false);
  /// Uniform values in [lo, hi); the usual parameter initializer.
  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad = true);

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  std::size_t rank() const { return n_->shape.size(); }
  std::size_t numel() const { return n_->numel(); }
  bool is_scalar() const { return defined() && numel() == 1; }

  std::span<const double> data() const { return n_->data; }
  std::span<double> data_mut() { return n_->data; }
  double value() const;  // numel()==1 read
  double at(std::size_t i) const { return n_->data.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return n_->requires_grad; }
  Tensor& set_requires_grad(bool v);
  bool has_grad() const { return defined() && !n_->grad.empty(); }
  std::span<const double> grad() const { return n_->grad; }
  std::span<double> grad_mut() { return n_->grad; }
  void ensure_grad() { n_->ensure_grad(); }
  void zero_grad();

  bool all_finite() const;

  /// Deep copy of values (fresh leaf; no graph history, no grad).
  Tensor clone_detached() const;

  detail::Node* node() const { return n_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}
  std::shared_ptr<detail::Node> n_;

  friend class OpBuilder;
};

// --- differentiable operations ------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double c);
Tensor mul(const Tensor& a, double c);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator+(const Tensor& a, double c) { return add(a, c); }
inline Tensor operator*(const Tensor& a, double c) { return mul(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return mul(a, c); }

Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);  // subgradient at 0 is 0
Tensor exp(const Tensor& x);

/// (m x k)(k x n) -> (m x n), or (m x k)(k) -> (m).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Stacks M equal-length vectors into an (M x K) matrix.
Tensor stack_rows(const std::vector<Tensor>& rows);
Tensor slice(const Tensor& v, std::size_t start, std::size_t len);  // rank-1
Tensor reshape(const Tensor& t, Shape shape);

/// softmax(scores) . values  with max-subtracted, numerically stable weights.
/// scores: (M), values: (M x K) -> (K).
Tensor softmax_weighted_sum(const Tensor& scores, const Tensor& values);
/// The weights alone (no graph participation); sums to 1 within 1e-12.
std::vector<double> softmax_weights(std::span<const double> scores);

Tensor mse(const Tensor& pred, const Tensor& target);
Tensor sum(const Tensor& t);
Tensor mean(const Tensor& t);

/// Inverted-scaling dropout; rate 0 is the identity. Training-path only --
/// evaluation code simply never applies it.
Tensor dropout(const Tensor& t, double rate, Rng& rng);

/// Reverse-mode sweep from a one-element root. Gradients of leaves
/// accumulate across calls; zero_grad() resets them.
void backward(const Tensor& root);

/// Throws NumericError when t holds a NaN or infinity.
void check_finite(const Tensor& t, const std::string& what);

// --- named parameter collections ------------------------------------------

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using NamedParams = std::vector<NamedTensor>;

std::size_t param_count(const NamedParams& params);
std::string shape_str(const Shape& s);

}  // namespace fewts
