#include "fewts/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace fewts {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

namespace detail {

Node::~Node() {
  // Graphs from long unrolls are chains tens of thousands of links deep;
  // a naive recursive shared_ptr teardown would overflow the stack. When
  // this node is the sole owner of a parent, steal the parent's links and
  // release everything from an explicit stack instead.
  std::vector<std::shared_ptr<Node>> stack;
  stack.swap(parents);
  while (!stack.empty()) {
    std::shared_ptr<Node> p = std::move(stack.back());
    stack.pop_back();
    if (p && p.use_count() == 1) {
      for (auto& gp : p->parents) stack.push_back(std::move(gp));
      p->parents.clear();
    }
  }
}

}  // namespace detail

// Grants tensor.cpp access to the private shared_ptr constructor.
class OpBuilder {
 public:
  static Tensor wrap(std::shared_ptr<detail::Node> n) { return Tensor(std::move(n)); }
  static const std::shared_ptr<detail::Node>& share(const Tensor& t) { return t.n_; }
};

namespace {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

Tensor make_node(Shape shape, std::vector<double> data) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  return OpBuilder::wrap(std::move(n));
}

// Marks `out` as an interior node with the given parents and backward
// closure, but only while grad recording is on and some input needs it.
template <typename Fn>
void record(Tensor& out, std::initializer_list<Tensor> parents, Fn&& fn) {
  bool needed = false;
  for (const Tensor& p : parents) needed = needed || p.requires_grad();
  if (!g_grad_enabled || !needed) return;
  detail::Node* n = out.node();
  n->requires_grad = true;
  n->interior = true;
  n->parents.reserve(parents.size());
  for (const Tensor& p : parents) n->parents.push_back(OpBuilder::share(p));
  n->backward_fn = std::forward<Fn>(fn);
}

void record_multi(Tensor& out, const std::vector<Tensor>& parents, std::function<void()> fn) {
  bool needed = false;
  for (const Tensor& p : parents) needed = needed || p.requires_grad();
  if (!g_grad_enabled || !needed) return;
  detail::Node* n = out.node();
  n->requires_grad = true;
  n->interior = true;
  n->parents.reserve(parents.size());
  for (const Tensor& p : parents) n->parents.push_back(OpBuilder::share(p));
  n->backward_fn = std::move(fn);
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

// --- Tensor basics ----------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Tensor t = make_node(shape, std::vector<double>(shape_numel(shape), 0.0));
  t.n_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = make_node(shape, std::vector<double>(shape_numel(shape), value));
  t.n_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return full({}, value, requires_grad);
}

Tensor Tensor::from(std::vector<double> data, Shape shape, bool requires_grad) {
  if (data.size() != shape_numel(shape)) {
    throw DimensionError("Tensor::from: " + std::to_string(data.size()) +
                         " values do not fill shape " + shape_str(shape));
  }
  Tensor t = make_node(std::move(shape), std::move(data));
  t.n_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_vector(std::vector<double> data, bool requires_grad) {
  Shape s{data.size()};
  return from(std::move(data), std::move(s), requires_grad);
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad) {
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.uniform(lo, hi);
  Tensor t = make_node(std::move(shape), std::move(data));
  t.n_->requires_grad = requires_grad;
  return t;
}

double Tensor::value() const {
  if (numel() != 1) {
    throw DimensionError("Tensor::value: tensor of shape " + shape_str(shape()) + " is not scalar");
  }
  return n_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (rank() != 2) throw DimensionError("Tensor::at(r,c): tensor is not rank-2");
  return n_->data.at(r * n_->shape[1] + c);
}

Tensor& Tensor::set_requires_grad(bool v) {
  n_->requires_grad = v;
  return *this;
}

void Tensor::zero_grad() {
  if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : n_->data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::clone_detached() const {
  Tensor t = make_node(n_->shape, n_->data);
  t.n_->requires_grad = n_->requires_grad;
  return t;
}

void check_finite(const Tensor& t, const std::string& what) {
  if (!t.all_finite()) throw NumericError(what + ": non-finite value encountered");
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::size_t param_count(const NamedParams& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

// --- elementwise ------------------------------------------------------------

namespace {

// Binary elementwise with scalar(rank-0)-tensor broadcast only.
enum class Bcast { none, left_scalar, right_scalar };

Bcast binary_check(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Bcast::none;
  if (a.rank() == 0) return Bcast::left_scalar;
  if (b.rank() == 0) return Bcast::right_scalar;
  shape_error(op, a.shape(), b.shape());
}

template <typename Combine, typename DLeft, typename DRight>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, Combine comb, DLeft dleft,
                 DRight dright) {
  const Bcast bc = binary_check(name, a, b);
  const Tensor& big = (bc == Bcast::left_scalar) ? b : a;
  std::vector<double> out(big.numel());
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = (bc == Bcast::left_scalar) ? av[0] : av[i];
    const double y = (bc == Bcast::right_scalar) ? bv[0] : bv[i];
    out[i] = comb(x, y);
  }
  Tensor res = make_node(big.shape(), std::move(out));
  record(res, {a, b}, [o = res.node(), pa = a.node(), pb = b.node(), bc, dleft, dright]() {
    const std::size_t n = o->numel();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = o->grad[i];
      const double x = (bc == Bcast::left_scalar) ? pa->data[0] : pa->data[i];
      const double y = (bc == Bcast::right_scalar) ? pb->data[0] : pb->data[i];
      if (pa->requires_grad) pa->grad[(bc == Bcast::left_scalar) ? 0 : i] += dleft(x, y) * g;
      if (pb->requires_grad) pb->grad[(bc == Bcast::right_scalar) ? 0 : i] += dright(x, y) * g;
    }
  });
  return res;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor add(const Tensor& a, double c) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v += c;
  Tensor res = make_node(a.shape(), std::move(out));
  record(res, {a}, [o = res.node(), pa = a.node()]() {
    for (std::size_t i = 0; i < o->numel(); ++i) pa->grad[i] += o->grad[i];
  });
  return res;
}

Tensor mul(const Tensor& a, double c) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= c;
  Tensor res = make_node(a.shape(), std::move(out));
  record(res, {a}, [o = res.node(), pa = a.node(), c]() {
    for (std::size_t i = 0; i < o->numel(); ++i) pa->grad[i] += c * o->grad[i];
  });
  return res;
}

namespace {

template <typename F, typename DF>
Tensor unary_op(const Tensor& x, F f, DF df_from_y) {
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  Tensor res = make_node(x.shape(), std::move(out));
  record(res, {x}, [o = res.node(), px = x.node(), df_from_y]() {
    for (std::size_t i = 0; i < o->numel(); ++i) {
      px->grad[i] += df_from_y(o->data[i], px->data[i]) * o->grad[i];
    }
  });
  return res;
}

}  // namespace

Tensor tanh(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::tanh(v); },
      [](double y, double) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double y, double) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double, double in) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::exp(v); },
      [](double y, double) { return y; });
}

// --- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 2 && b.rank() != 1)) {
    throw DimensionError("matmul: unsupported ranks: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t bk = b.shape()[0];
  if (k != bk) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const bool vec = (b.rank() == 1);
  const std::size_t n = vec ? 1 : b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = av[i * k + j];
      for (std::size_t c = 0; c < n; ++c) out[i * n + c] += aij * bv[j * n + c];
    }
  }
  Tensor res = make_node(vec ? Shape{m} : Shape{m, n}, std::move(out));
  record(res, {a, b}, [o = res.node(), pa = a.node(), pb = b.node(), m, k, n]() {
    // dA = dC . B^T ; dB = A^T . dC
    if (pa->requires_grad) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < n; ++c) acc += o->grad[i * n + c] * pb->data[j * n + c];
          pa->grad[i * k + j] += acc;
        }
      }
    }
    if (pb->requires_grad) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double aij = pa->data[i * k + j];
          for (std::size_t c = 0; c < n; ++c) pb->grad[j * n + c] += aij * o->grad[i * n + c];
        }
      }
    }
  });
  return res;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose: tensor is not rank-2");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  std::vector<double> out(m * n);
  const auto av = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  }
  Tensor res = make_node({n, m}, std::move(out));
  record(res, {a}, [o = res.node(), pa = a.node(), m, n]() {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) pa->grad[i * n + j] += o->grad[j * m + i];
    }
  });
  return res;
}

// --- structural -------------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: empty part list");
  const std::size_t rank = parts.front().rank();
  if (rank == 0 || rank > 2 || axis >= rank) {
    throw DimensionError("concat: unsupported rank/axis for shape " +
                         shape_str(parts.front().shape()));
  }
  for (const Tensor& p : parts) {
    if (p.rank() != rank) shape_error("concat", parts.front().shape(), p.shape());
    for (std::size_t d = 0; d < rank; ++d) {
      if (d != axis && p.shape()[d] != parts.front().shape()[d]) {
        shape_error("concat", parts.front().shape(), p.shape());
      }
    }
  }

  Shape out_shape = parts.front().shape();
  out_shape[axis] = 0;
  for (const Tensor& p : parts) out_shape[axis] += p.shape()[axis];

  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets(parts.size());
  if (rank == 1 || axis == 0) {
    std::size_t pos = 0;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
      offsets[pi] = pos;
      const auto pv = parts[pi].data();
      std::copy(pv.begin(), pv.end(), out.begin() + static_cast<std::ptrdiff_t>(pos));
      pos += pv.size();
    }
  } else {  // rank 2, axis 1
    const std::size_t rows = out_shape[0];
    const std::size_t out_cols = out_shape[1];
    std::size_t col = 0;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
      offsets[pi] = col;
      const std::size_t pc = parts[pi].shape()[1];
      const auto pv = parts[pi].data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < pc; ++c) out[r * out_cols + col + c] = pv[r * pc + c];
      }
      col += pc;
    }
  }

  Tensor res = make_node(out_shape, std::move(out));
  std::vector<detail::Node*> pnodes;
  pnodes.reserve(parts.size());
  for (const Tensor& p : parts) pnodes.push_back(p.node());
  record_multi(res, parts,
               [o = res.node(), pnodes = std::move(pnodes), offsets = std::move(offsets), rank,
                axis]() {
                 const std::size_t out_cols = (rank == 2) ? o->shape[1] : 0;
                 for (std::size_t pi = 0; pi < pnodes.size(); ++pi) {
                   detail::Node* p = pnodes[pi];
                   if (!p->requires_grad) continue;
                   if (rank == 1 || axis == 0) {
                     const std::size_t off = offsets[pi];
                     for (std::size_t i = 0; i < p->numel(); ++i) p->grad[i] += o->grad[off + i];
                   } else {
                     const std::size_t rows = p->shape[0];
                     const std::size_t pc = p->shape[1];
                     const std::size_t col = offsets[pi];
                     for (std::size_t r = 0; r < rows; ++r) {
                       for (std::size_t c = 0; c < pc; ++c) {
                         p->grad[r * pc + c] += o->grad[r * out_cols + col + c];
                       }
                     }
                   }
                 }
               });
  return res;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: empty row list");
  const std::size_t k = rows.front().numel();
  for (const Tensor& r : rows) {
    if (r.rank() != 1 || r.numel() != k) shape_error("stack_rows", rows.front().shape(), r.shape());
  }
  const std::size_t m = rows.size();
  std::vector<double> out(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    const auto rv = rows[i].data();
    std::copy(rv.begin(), rv.end(), out.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  Tensor res = make_node({m, k}, std::move(out));
  std::vector<detail::Node*> pnodes;
  pnodes.reserve(m);
  for (const Tensor& r : rows) pnodes.push_back(r.node());
  record_multi(res, rows, [o = res.node(), pnodes = std::move(pnodes), k]() {
    for (std::size_t i = 0; i < pnodes.size(); ++i) {
      detail::Node* p = pnodes[i];
      if (!p->requires_grad) continue;
      for (std::size_t j = 0; j < k; ++j) p->grad[j] += o->grad[i * k + j];
    }
  });
  return res;
}

Tensor slice(const Tensor& v, std::size_t start, std::size_t len) {
  if (v.rank() != 1) throw DimensionError("slice: tensor is not rank-1");
  if (start + len > v.numel()) {
    throw DimensionError("slice: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") exceeds length " +
                         std::to_string(v.numel()));
  }
  std::vector<double> out(v.data().begin() + static_cast<std::ptrdiff_t>(start),
                          v.data().begin() + static_cast<std::ptrdiff_t>(start + len));
  Tensor res = make_node({len}, std::move(out));
  record(res, {v}, [o = res.node(), pv = v.node(), start, len]() {
    for (std::size_t i = 0; i < len; ++i) pv->grad[start + i] += o->grad[i];
  });
  return res;
}

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_numel(shape) != t.numel()) {
    throw DimensionError("reshape: " + shape_str(t.shape()) + " does not hold shape " +
                         shape_str(shape));
  }
  std::vector<double> out(t.data().begin(), t.data().end());
  Tensor res = make_node(std::move(shape), std::move(out));
  record(res, {t}, [o = res.node(), pt = t.node()]() {
    for (std::size_t i = 0; i < o->numel(); ++i) pt->grad[i] += o->grad[i];
  });
  return res;
}

// --- reductions and losses ----------------------------------------------

std::vector<double> softmax_weights(std::span<const double> scores) {
  if (scores.empty()) throw EmptySupportError("softmax_weights: empty support (M=0)");
  const double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> w(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    w[i] = std::exp(scores[i] - mx);
    z += w[i];
  }
  for (double& v : w) v /= z;
  return w;
}

Tensor softmax_weighted_sum(const Tensor& scores, const Tensor& values) {
  if (scores.rank() != 1) throw DimensionError("softmax_weighted_sum: scores must be rank-1");
  if (scores.numel() == 0) throw EmptySupportError("softmax_weighted_sum: empty support (M=0)");
  if (values.rank() != 2 || values.shape()[0] != scores.numel()) {
    throw DimensionError("softmax_weighted_sum: values " + shape_str(values.shape()) +
                         " do not match scores " + shape_str(scores.shape()));
  }
  const std::size_t m = scores.numel();
  const std::size_t k = values.shape()[1];
  std::vector<double> w = softmax_weights(scores.data());
  std::vector<double> out(k, 0.0);
  const auto vv = values.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < k; ++c) out[c] += w[i] * vv[i * k + c];
  }
  Tensor res = make_node({k}, std::move(out));
  record(res, {scores, values},
         [o = res.node(), ps = scores.node(), pv = values.node(), w = std::move(w), m, k]() {
           // u_i = dL/da . v_i ; ds_i = w_i (u_i - sum_j w_j u_j)
           std::vector<double> u(m, 0.0);
           for (std::size_t i = 0; i < m; ++i) {
             for (std::size_t c = 0; c < k; ++c) u[i] += o->grad[c] * pv->data[i * k + c];
           }
           if (pv->requires_grad) {
             for (std::size_t i = 0; i < m; ++i) {
               for (std::size_t c = 0; c < k; ++c) pv->grad[i * k + c] += w[i] * o->grad[c];
             }
           }
           if (ps->requires_grad) {
             double wu = 0.0;
             for (std::size_t i = 0; i < m; ++i) wu += w[i] * u[i];
             for (std::size_t i = 0; i < m; ++i) ps->grad[i] += w[i] * (u[i] - wu);
           }
         });
  return res;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) shape_error("mse", pred.shape(), target.shape());
  const std::size_t n = pred.numel();
  if (n == 0) throw DimensionError("mse: empty operands");
  double acc = 0.0;
  const auto pv = pred.data();
  const auto tv = target.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pv[i] - tv[i];
    acc += d * d;
  }
  Tensor res = make_node({}, {acc / static_cast<double>(n)});
  record(res, {pred, target}, [o = res.node(), pp = pred.node(), pt = target.node(), n]() {
    const double g = o->grad[0] * 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pp->data[i] - pt->data[i];
      if (pp->requires_grad) pp->grad[i] += g * d;
      if (pt->requires_grad) pt->grad[i] -= g * d;
    }
  });
  return res;
}

Tensor sum(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.data()) acc += v;
  Tensor res = make_node({}, {acc});
  record(res, {t}, [o = res.node(), pt = t.node()]() {
    for (std::size_t i = 0; i < pt->numel(); ++i) pt->grad[i] += o->grad[0];
  });
  return res;
}

Tensor mean(const Tensor& t) {
  const std::size_t n = t.numel();
  if (n == 0) throw DimensionError("mean: empty tensor");
  double acc = 0.0;
  for (double v : t.data()) acc += v;
  Tensor res = make_node({}, {acc / static_cast<double>(n)});
  record(res, {t}, [o = res.node(), pt = t.node(), n]() {
    const double g = o->grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) pt->grad[i] += g;
  });
  return res;
}

Tensor dropout(const Tensor& t, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout: rate " + std::to_string(rate) + " outside [0,1)");
  }
  if (rate == 0.0) return t;
  const double scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(t.numel());
  for (double& m : mask) m = (rng.real01() >= rate) ? scale : 0.0;
  std::vector<double> out(t.numel());
  const auto tv = t.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = tv[i] * mask[i];
  Tensor res = make_node(t.shape(), std::move(out));
  record(res, {t}, [o = res.node(), pt = t.node(), mask = std::move(mask)]() {
    for (std::size_t i = 0; i < o->numel(); ++i) pt->grad[i] += mask[i] * o->grad[i];
  });
  return res;
}

// --- reverse sweep ----------------------------------------------------------

void backward(const Tensor& root) {
  if (!root.defined()) throw DimensionError("backward: undefined tensor");
  if (root.numel() != 1) {
    throw DimensionError("backward: root of shape " + shape_str(root.shape()) + " is not scalar");
  }
  detail::Node* r = root.node();
  if (!r->requires_grad) return;  // constant root: nothing to differentiate

  // Post-order over requires_grad ancestors; producers end up before
  // consumers, so the reversed order accumulates each node's gradient
  // only after all of its consumers have run.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, bool>> stack{{r, false}};
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(n);
      continue;
    }
    if (!visited.insert(n).second) continue;
    stack.emplace_back(n, true);
    for (const auto& p : n->parents) {
      if (p->requires_grad && !visited.count(p.get())) stack.emplace_back(p.get(), false);
    }
  }

  // Interior gradients are per-sweep scratch; leaf gradients accumulate
  // across sweeps until zero_grad.
  for (detail::Node* n : order) {
    if (n->interior) {
      n->grad.assign(n->numel(), 0.0);
    } else {
      n->ensure_grad();
    }
  }
  r->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn();
  }
}

}  // namespace fewts
