#include "transmef/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "transmef/error.hpp"
#include "transmef/kernels.hpp"

namespace transmef {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

thread_local bool g_grad_enabled = true;

template <class T>
using Node = typename BasicTensor<T>::Node;
template <class T>
using NodePtr = std::shared_ptr<Node<T>>;

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto e : shape)
    if (e == 0) throw ShapeError("tensor shape " + to_string(shape) + " has a zero extent");
}

template <class T>
void check_finite(const char* op, const std::vector<T>& values) {
  for (const T v : values)
    if (!std::isfinite(v)) throw NumericError(std::string(op) + " produced a non-finite value");
}

template <class T>
BasicTensor<T> make_op(const char* op, Shape shape, std::vector<T> value,
                       std::vector<NodePtr<T>> inputs, std::function<void(Node<T>&)> backward) {
  check_finite(op, value);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  const bool needs_grad =
      g_grad_enabled &&
      std::any_of(inputs.begin(), inputs.end(), [](const NodePtr<T>& n) { return n->requires_grad; });
  if (needs_grad) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return BasicTensor<T>(std::move(node));
}

template <class N>
auto grad_of(const std::shared_ptr<N>& n) -> decltype(&n->ensure_grad()) {
  return n->requires_grad ? &n->ensure_grad() : nullptr;
}

// Shape rule for broadcasting binary ops.
template <class T>
Shape binary_shape(const char* op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.size() == 1) return a.shape();
  if (a.size() == 1) return b.shape();
  throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                   to_string(b.shape()));
}

// Accumulates g into an operand's grad, reducing when the operand was broadcast.
template <class T>
void accumulate_broadcast(std::vector<T>& dst, const std::vector<T>& g, T factor = T(1)) {
  if (dst.size() == g.size()) {
    kernels::axpy(g.size(), factor, g.data(), dst.data());
  } else {
    T total = T(0);
    for (const T v : g) total += v;
    dst[0] += factor * total;
  }
}

template <class T, class F>
std::vector<T> map_binary(const BasicTensor<T>& a, const BasicTensor<T>& b, std::size_t n, F f) {
  std::vector<T> out(n);
  const auto av = a.data();
  const auto bv = b.data();
  const bool a_scalar = av.size() == 1 && n != 1;
  const bool b_scalar = bv.size() == 1 && n != 1;
  for (std::size_t i = 0; i < n; ++i) out[i] = f(av[a_scalar ? 0 : i], bv[b_scalar ? 0 : i]);
  return out;
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// --- BasicTensor -------------------------------------------------------------

template <class T>
BasicTensor<T> BasicTensor<T>::create(Shape shape, std::vector<T> values, bool requires_grad) {
  validate_shape(shape);
  if (numel(shape) != values.size())
    throw ShapeError("shape " + to_string(shape) + " needs " + std::to_string(numel(shape)) +
                     " values, got " + std::to_string(values.size()));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <class T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
  validate_shape(shape);
  const std::size_t n = numel(shape);
  return create(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <class T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
  return create({1}, {value}, requires_grad);
}

template <class T>
T BasicTensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

template <class T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return create(shape(), node_->value, false);
}

template <class T>
void BasicTensor<T>::backward() const {
  if (size() != 1) throw ShapeError("backward() requires a scalar, got " + to_string(shape()));
  if (!node_->requires_grad) return;

  // Post-order DFS gives a topological order (inputs before consumers).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* in = n->inputs[next++].get();
      if (in->requires_grad && visited.insert(in).second) stack.emplace_back(in, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward) continue;
    if (!n->grad.empty()) n->backward(*n);
    n->grad.clear();
  }
}

// --- elementwise -------------------------------------------------------------

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  Shape shape = binary_shape("add", a, b);
  const std::size_t n = numel(shape);
  std::vector<T> out;
  if (a.size() == n && b.size() == n) {
    out.resize(n);
    kernels::add(n, a.data().data(), b.data().data(), out.data());
  } else {
    out = map_binary(a, b, n, [](T x, T y) { return x + y; });
  }
  return make_op<T>("add", std::move(shape), std::move(out), {a.node_ptr(), b.node_ptr()},
                    [](Node<T>& self) {
                      for (auto& in : self.inputs)
                        if (auto* g = grad_of(in)) accumulate_broadcast(*g, self.grad);
                    });
}

template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  Shape shape = binary_shape("sub", a, b);
  auto out = map_binary(a, b, numel(shape), [](T x, T y) { return x - y; });
  return make_op<T>("sub", std::move(shape), std::move(out), {a.node_ptr(), b.node_ptr()},
                    [](Node<T>& self) {
                      if (auto* g = grad_of(self.inputs[0])) accumulate_broadcast(*g, self.grad);
                      if (auto* g = grad_of(self.inputs[1])) accumulate_broadcast(*g, self.grad, T(-1));
                    });
}

template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  Shape shape = binary_shape("mul", a, b);
  const std::size_t n = numel(shape);
  std::vector<T> out;
  if (a.size() == n && b.size() == n) {
    out.resize(n);
    kernels::mul(n, a.data().data(), b.data().data(), out.data());
  } else {
    out = map_binary(a, b, n, [](T x, T y) { return x * y; });
  }
  return make_op<T>("mul", std::move(shape), std::move(out), {a.node_ptr(), b.node_ptr()},
                    [](Node<T>& self) {
                      const std::size_t n = self.grad.size();
                      for (int side = 0; side < 2; ++side) {
                        auto* g = grad_of(self.inputs[side]);
                        if (!g) continue;
                        const auto& other = self.inputs[1 - side]->value;
                        std::vector<T> term(n);
                        for (std::size_t i = 0; i < n; ++i)
                          term[i] = self.grad[i] * other[other.size() == 1 ? 0 : i];
                        accumulate_broadcast(*g, term);
                      }
                    });
}

template <class T>
BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  Shape shape = binary_shape("div", a, b);
  auto out = map_binary(a, b, numel(shape), [](T x, T y) { return x / y; });
  return make_op<T>("div", std::move(shape), std::move(out), {a.node_ptr(), b.node_ptr()},
                    [](Node<T>& self) {
                      const std::size_t n = self.grad.size();
                      const auto& av = self.inputs[0]->value;
                      const auto& bv = self.inputs[1]->value;
                      auto at = [n](const std::vector<T>& v, std::size_t i) {
                        return v[v.size() == 1 && n != 1 ? 0 : i];
                      };
                      if (auto* g = grad_of(self.inputs[0])) {
                        std::vector<T> term(n);
                        for (std::size_t i = 0; i < n; ++i) term[i] = self.grad[i] / at(bv, i);
                        accumulate_broadcast(*g, term);
                      }
                      if (auto* g = grad_of(self.inputs[1])) {
                        std::vector<T> term(n);
                        for (std::size_t i = 0; i < n; ++i) {
                          const T bi = at(bv, i);
                          term[i] = -self.grad[i] * at(av, i) / (bi * bi);
                        }
                        accumulate_broadcast(*g, term);
                      }
                    });
}

template <class T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T value) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v += value;
  return make_op<T>("add_scalar", a.shape(), std::move(out), {a.node_ptr()}, [](Node<T>& self) {
    kernels::axpy(self.grad.size(), T(1), self.grad.data(), self.inputs[0]->ensure_grad().data());
  });
}

template <class T>
BasicTensor<T> mul_scalar(const BasicTensor<T>& a, T value) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= value;
  return make_op<T>("mul_scalar", a.shape(), std::move(out), {a.node_ptr()},
                    [value](Node<T>& self) {
                      kernels::axpy(self.grad.size(), value, self.grad.data(),
                                    self.inputs[0]->ensure_grad().data());
                    });
}

namespace {

// Unary op helper: forward f(x), backward g * df(x, y).
template <class T, class F, class DF>
BasicTensor<T> unary(const char* op, const BasicTensor<T>& a, F f, DF df) {
  const auto x = a.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return make_op<T>(op, a.shape(), std::move(out), {a.node_ptr()}, [df](Node<T>& self) {
    auto& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(in.value[i], self.value[i]);
  });
}

}  // namespace

template <class T>
BasicTensor<T> pow_scalar(const BasicTensor<T>& a, T exponent) {
  return unary<T>(
      "pow_scalar", a, [exponent](T x) { return std::pow(x, exponent); },
      [exponent](T x, T) { return exponent * std::pow(x, exponent - T(1)); });
}

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  std::vector<T> out(a.size());
  kernels::relu(a.size(), a.data().data(), out.data());
  return make_op<T>("relu", a.shape(), std::move(out), {a.node_ptr()}, [](Node<T>& self) {
    auto& in = *self.inputs[0];
    kernels::relu_backward(self.grad.size(), in.value.data(), self.grad.data(),
                           in.ensure_grad().data());
  });
}

template <class T>
BasicTensor<T> gelu(const BasicTensor<T>& a) {
  constexpr T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  constexpr T k = static_cast<T>(0.044715);
  return unary<T>(
      "gelu", a,
      [](T x) { return T(0.5) * x * (T(1) + std::tanh(c * (x + k * x * x * x))); },
      [](T x, T) {
        const T t = std::tanh(c * (x + k * x * x * x));
        return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3) * k * x * x);
      });
}

template <class T>
BasicTensor<T> exp(const BasicTensor<T>& a) {
  return unary<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <class T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a) {
  return unary<T>(
      "sigmoid", a,
      [](T x) {
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        const T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
BasicTensor<T> sqrt(const BasicTensor<T>& a) {
  return unary<T>(
      "sqrt", a, [](T x) { return std::sqrt(x); }, [](T, T y) { return T(0.5) / y; });
}

// --- reductions --------------------------------------------------------------

template <class T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  T total = T(0);
  for (const T v : a.data()) total += v;
  return make_op<T>("sum", {1}, {total}, {a.node_ptr()}, [](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    const T s = self.grad[0];
    for (auto& v : g) v += s;
  });
}

template <class T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  // Divides rather than scaling by 1/n, so the mean of equal values is exact.
  const T n = static_cast<T>(a.size());
  T total = T(0);
  for (const T v : a.data()) total += v;
  return make_op<T>("mean", {1}, {total / n}, {a.node_ptr()}, [n](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    const T s = self.grad[0] / n;
    for (auto& v : g) v += s;
  });
}

// --- linear algebra ----------------------------------------------------------

template <class T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n);
  kernels::gemm<T>(kernels::Trans::kNo, kernels::Trans::kNo, m, n, k, T(1), a.data().data(), k,
                   b.data().data(), n, T(0), out.data(), n);
  return make_op<T>("matmul", {m, n}, std::move(out), {a.node_ptr(), b.node_ptr()},
                    [m, n, k](Node<T>& self) {
                      auto& an = *self.inputs[0];
                      auto& bn = *self.inputs[1];
                      using kernels::Trans;
                      if (an.requires_grad)  // dA += G B^T
                        kernels::gemm<T>(Trans::kNo, Trans::kYes, m, k, n, T(1), self.grad.data(), n,
                                         bn.value.data(), n, T(1), an.ensure_grad().data(), k);
                      if (bn.requires_grad)  // dB += A^T G
                        kernels::gemm<T>(Trans::kYes, Trans::kNo, k, n, m, T(1), an.value.data(), k,
                                         self.grad.data(), n, T(1), bn.ensure_grad().data(), n);
                    });
}

template <class T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects a 2-D tensor, got " + to_string(a.shape()));
  const std::size_t r = a.dim(0), c = a.dim(1);
  const auto x = a.data();
  std::vector<T> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return make_op<T>("transpose", {c, r}, std::move(out), {a.node_ptr()}, [r, c](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

template <class T>
BasicTensor<T> add_row_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  if (x.rank() != 2 || bias.size() != x.dim(1))
    throw ShapeError("add_row_bias: bias " + to_string(bias.shape()) + " does not match rows of " +
                     to_string(x.shape()));
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<T> out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i) kernels::add(n, out.data() + i * n, b.data(), out.data() + i * n);
  return make_op<T>("add_row_bias", x.shape(), std::move(out), {x.node_ptr(), bias.node_ptr()},
                    [m, n](Node<T>& self) {
                      if (auto* g = grad_of(self.inputs[0]))
                        kernels::axpy(self.grad.size(), T(1), self.grad.data(), g->data());
                      if (auto* g = grad_of(self.inputs[1]))
                        for (std::size_t i = 0; i < m; ++i)
                          kernels::axpy(n, T(1), self.grad.data() + i * n, g->data());
                    });
}

namespace {

struct ConvGeometry {
  std::size_t c_in, h, w, k, pad, out_h, out_w;
};

template <class T>
void im2col(const ConvGeometry& g, const T* x, T* cols) {
  const std::size_t hw = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.c_in; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = cols + ((c * g.k + ky) * g.k + kx) * hw;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox + kx) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) ? T(0)
                                                                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
}

template <class T>
void col2im_add(const ConvGeometry& g, const T* cols, T* dx) {
  const std::size_t hw = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.c_in; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = cols + ((c * g.k + ky) * g.k + kx) * hw;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = dx + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[static_cast<std::size_t>(ix)] += src[ox];
          }
        }
      }
}

}  // namespace

template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias, std::size_t padding) {
  if (x.rank() != 3) throw ShapeError("conv2d input must be [C,H,W], got " + to_string(x.shape()));
  if (kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3) || kernel.dim(2) % 2 == 0)
    throw ShapeError("conv2d kernel must be [C_out,C_in,k,k] with odd k, got " +
                     to_string(kernel.shape()));
  if (kernel.dim(1) != x.dim(0))
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(x.dim(0)) +
                     " channels, kernel expects " + std::to_string(kernel.dim(1)));
  const std::size_t c_out = kernel.dim(0);
  if (bias.defined() && bias.size() != c_out)
    throw ShapeError("conv2d bias has " + std::to_string(bias.size()) + " entries, expected " +
                     std::to_string(c_out));
  ConvGeometry geo{x.dim(0), x.dim(1), x.dim(2), kernel.dim(2), padding, 0, 0};
  if (geo.h + 2 * padding < geo.k || geo.w + 2 * padding < geo.k)
    throw ShapeError("conv2d input " + to_string(x.shape()) + " smaller than kernel");
  geo.out_h = geo.h + 2 * padding - geo.k + 1;
  geo.out_w = geo.w + 2 * padding - geo.k + 1;
  const std::size_t hw = geo.out_h * geo.out_w;
  const std::size_t kk = geo.c_in * geo.k * geo.k;
  const bool direct = geo.k == 1 && padding == 0;

  std::vector<T> cols;
  const T* colp = x.data().data();
  if (!direct) {
    cols.resize(kk * hw);
    im2col(geo, x.data().data(), cols.data());
    colp = cols.data();
  }
  std::vector<T> out(c_out * hw);
  if (bias.defined()) {
    const auto b = bias.data();
    for (std::size_t o = 0; o < c_out; ++o) std::fill_n(out.data() + o * hw, hw, b[o]);
  }
  using kernels::Trans;
  kernels::gemm<T>(Trans::kNo, Trans::kNo, c_out, hw, kk, T(1), kernel.data().data(), kk, colp, hw,
                   bias.defined() ? T(1) : T(0), out.data(), hw);

  std::vector<NodePtr<T>> inputs{x.node_ptr(), kernel.node_ptr()};
  if (bias.defined()) inputs.push_back(bias.node_ptr());
  return make_op<T>(
      "conv2d", {c_out, geo.out_h, geo.out_w}, std::move(out), std::move(inputs),
      [geo, c_out, hw, kk, direct](Node<T>& self) {
        auto& xn = *self.inputs[0];
        auto& kn = *self.inputs[1];
        const T* g = self.grad.data();
        std::vector<T> cols;
        const T* colp = xn.value.data();
        if (kn.requires_grad) {
          if (!direct) {
            cols.resize(kk * hw);
            im2col(geo, xn.value.data(), cols.data());
            colp = cols.data();
          }
          // dK += G [c_out,hw] * cols^T [hw,kk]
          kernels::gemm<T>(Trans::kNo, Trans::kYes, c_out, kk, hw, T(1), g, hw, colp, hw, T(1),
                           kn.ensure_grad().data(), kk);
        }
        if (xn.requires_grad) {
          auto& dx = xn.ensure_grad();
          if (direct) {
            kernels::gemm<T>(Trans::kYes, Trans::kNo, kk, hw, c_out, T(1), kn.value.data(), kk, g,
                             hw, T(1), dx.data(), hw);
          } else {
            std::vector<T> dcols(kk * hw);
            kernels::gemm<T>(Trans::kYes, Trans::kNo, kk, hw, c_out, T(1), kn.value.data(), kk, g,
                             hw, T(0), dcols.data(), hw);
            col2im_add(geo, dcols.data(), dx.data());
          }
        }
        if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
          auto& db = self.inputs[2]->ensure_grad();
          for (std::size_t o = 0; o < c_out; ++o) {
            T s = T(0);
            for (std::size_t i = 0; i < hw; ++i) s += g[o * hw + i];
            db[o] += s;
          }
        }
      });
}

template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& x, std::size_t axis) {
  if (axis >= x.rank())
    throw ShapeError("softmax axis " + std::to_string(axis) + " out of range for " + to_string(x.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t len = x.dim(axis);
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t r = 0; r < inner; ++r) {
      const std::size_t base = o * len * inner + r;
      T mx = in[base];
      for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, in[base + i * inner]);
      T total = T(0);
      for (std::size_t i = 0; i < len; ++i) {
        const T e = std::exp(in[base + i * inner] - mx);
        out[base + i * inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < len; ++i) out[base + i * inner] /= total;
    }
  return make_op<T>("softmax", x.shape(), std::move(out), {x.node_ptr()},
                    [outer, inner, len](Node<T>& self) {
                      auto& g = self.inputs[0]->ensure_grad();
                      const auto& y = self.value;
                      for (std::size_t o = 0; o < outer; ++o)
                        for (std::size_t r = 0; r < inner; ++r) {
                          const std::size_t base = o * len * inner + r;
                          T dot = T(0);
                          for (std::size_t i = 0; i < len; ++i)
                            dot += self.grad[base + i * inner] * y[base + i * inner];
                          for (std::size_t i = 0; i < len; ++i) {
                            const std::size_t j = base + i * inner;
                            g[j] += y[j] * (self.grad[j] - dot);
                          }
                        }
                    });
}

template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& scale,
                          const BasicTensor<T>& shift, T eps) {
  if (x.rank() != 2 || scale.size() != x.dim(1) || shift.size() != x.dim(1))
    throw ShapeError("layer_norm: x " + to_string(x.shape()) + " with scale " +
                     to_string(scale.shape()) + " and shift " + to_string(shift.shape()));
  const std::size_t m = x.dim(0), d = x.dim(1);
  const auto in = x.data();
  const auto gamma = scale.data();
  const auto beta = shift.data();
  auto xhat = std::make_shared<std::vector<T>>(m * d);
  auto rstd = std::make_shared<std::vector<T>>(m);
  std::vector<T> out(m * d);
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = in.data() + i * d;
    T mu = T(0);
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<T>(d);
    T var = T(0);
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(d);
    const T r = T(1) / std::sqrt(var + eps);
    (*rstd)[i] = r;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (row[j] - mu) * r;
      (*xhat)[i * d + j] = h;
      out[i * d + j] = h * gamma[j] + beta[j];
    }
  }
  return make_op<T>(
      "layer_norm", x.shape(), std::move(out), {x.node_ptr(), scale.node_ptr(), shift.node_ptr()},
      [m, d, xhat, rstd](Node<T>& self) {
        auto& xn = *self.inputs[0];
        const auto& gamma = self.inputs[1]->value;
        const T* g = self.grad.data();
        if (auto* gs = grad_of(self.inputs[1]))
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) (*gs)[j] += g[i * d + j] * (*xhat)[i * d + j];
        if (auto* gb = grad_of(self.inputs[2]))
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) (*gb)[j] += g[i * d + j];
        if (xn.requires_grad) {
          auto& gx = xn.ensure_grad();
          std::vector<T> gh(d);
          for (std::size_t i = 0; i < m; ++i) {
            T mean_gh = T(0), mean_ghx = T(0);
            for (std::size_t j = 0; j < d; ++j) {
              gh[j] = g[i * d + j] * gamma[j];
              mean_gh += gh[j];
              mean_ghx += gh[j] * (*xhat)[i * d + j];
            }
            mean_gh /= static_cast<T>(d);
            mean_ghx /= static_cast<T>(d);
            for (std::size_t j = 0; j < d; ++j)
              gx[i * d + j] += (*rstd)[i] * (gh[j] - mean_gh - (*xhat)[i * d + j] * mean_ghx);
          }
        }
      });
}

// --- data movement -----------------------------------------------------------

template <class T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
  validate_shape(shape);
  if (numel(shape) != x.size())
    throw ShapeError("reshape " + to_string(x.shape()) + " -> " + to_string(shape));
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_op<T>("reshape", std::move(shape), std::move(out), {x.node_ptr()}, [](Node<T>& self) {
    kernels::axpy(self.grad.size(), T(1), self.grad.data(), self.inputs[0]->ensure_grad().data());
  });
}

template <class T>
BasicTensor<T> gather(const BasicTensor<T>& x, std::shared_ptr<const std::vector<std::size_t>> indices,
                      Shape shape) {
  validate_shape(shape);
  if (numel(shape) != indices->size())
    throw ShapeError("gather: " + std::to_string(indices->size()) + " indices for shape " + to_string(shape));
  const auto in = x.data();
  std::vector<T> out(indices->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t src = (*indices)[i];
    if (src >= in.size()) throw ShapeError("gather index out of range");
    out[i] = in[src];
  }
  return make_op<T>("gather", std::move(shape), std::move(out), {x.node_ptr()},
                    [indices](Node<T>& self) {
                      auto& g = self.inputs[0]->ensure_grad();
                      for (std::size_t i = 0; i < indices->size(); ++i) g[(*indices)[i]] += self.grad[i];
                    });
}

template <class T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat axis out of range");
  std::size_t outer = 1, inner = 1, total_axis = 0;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  std::vector<std::size_t> extents;
  std::vector<NodePtr<T>> inputs;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size()) throw ShapeError("concat rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i])
        throw ShapeError("concat: " + to_string(s) + " incompatible with " + to_string(first));
    extents.push_back(s[axis]);
    total_axis += s[axis];
    inputs.push_back(p.node_ptr());
  }
  Shape shape = first;
  shape[axis] = total_axis;
  std::vector<T> out(numel(shape));
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const std::size_t chunk = extents[p] * inner;
      const T* src = parts[p].data().data() + o * chunk;
      std::copy(src, src + chunk, out.data() + (o * total_axis + offset) * inner);
      offset += extents[p];
    }
  }
  return make_op<T>("concat", std::move(shape), std::move(out), std::move(inputs),
                    [outer, inner, total_axis, extents](Node<T>& self) {
                      std::size_t offset = 0;
                      for (std::size_t p = 0; p < extents.size(); ++p) {
                        const std::size_t chunk = extents[p] * inner;
                        if (auto* g = grad_of(self.inputs[p]))
                          for (std::size_t o = 0; o < outer; ++o)
                            kernels::axpy(chunk, T(1),
                                          self.grad.data() + (o * total_axis + offset) * inner,
                                          g->data() + o * chunk);
                        offset += extents[p];
                      }
                    });
}

template <class T>
BasicTensor<T> slice(const BasicTensor<T>& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank() || length == 0 || start + length > x.dim(axis))
    throw ShapeError("slice [" + std::to_string(start) + ", +" + std::to_string(length) +
                     ") on axis " + std::to_string(axis) + " of " + to_string(x.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t full = x.dim(axis);
  Shape shape = x.shape();
  shape[axis] = length;
  std::vector<T> out(numel(shape));
  const auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(in.data() + (o * full + start) * inner, length * inner, out.data() + o * length * inner);
  return make_op<T>("slice", std::move(shape), std::move(out), {x.node_ptr()},
                    [outer, inner, full, start, length](Node<T>& self) {
                      auto& g = self.inputs[0]->ensure_grad();
                      for (std::size_t o = 0; o < outer; ++o)
                        kernels::axpy(length * inner, T(1), self.grad.data() + o * length * inner,
                                      g.data() + (o * full + start) * inner);
                    });
}

#define TRANSMEF_INSTANTIATE_TENSOR(T)                                                             \
  template class BasicTensor<T>;                                                                   \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> div(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> add_scalar(const BasicTensor<T>&, T);                                    \
  template BasicTensor<T> mul_scalar(const BasicTensor<T>&, T);                                    \
  template BasicTensor<T> pow_scalar(const BasicTensor<T>&, T);                                    \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                             \
  template BasicTensor<T> gelu(const BasicTensor<T>&);                                             \
  template BasicTensor<T> exp(const BasicTensor<T>&);                                              \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                          \
  template BasicTensor<T> sqrt(const BasicTensor<T>&);                                             \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                              \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                             \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                                        \
  template BasicTensor<T> add_row_bias(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                     \
                                 const BasicTensor<T>&, std::size_t);                              \
  template BasicTensor<T> softmax(const BasicTensor<T>&, std::size_t);                             \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                     const BasicTensor<T>&, T);                                    \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                   \
  template BasicTensor<T> gather(const BasicTensor<T>&,                                            \
                                 std::shared_ptr<const std::vector<std::size_t>>, Shape);          \
  template BasicTensor<T> concat(const std::vector<BasicTensor<T>>&, std::size_t);                 \
  template BasicTensor<T> slice(const BasicTensor<T>&, std::size_t, std::size_t, std::size_t);

TRANSMEF_INSTANTIATE_TENSOR(float)
TRANSMEF_INSTANTIATE_TENSOR(double)

}  // namespace transmef
