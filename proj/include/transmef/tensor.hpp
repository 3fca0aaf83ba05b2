#pragma once

// N-dimensional array with reverse-mode automatic differentiation.
//
// A BasicTensor is a cheap handle to an immutable node. Operations on tensors
// that require gradients record their inputs and a gradient rule; backward()
// walks the recorded graph in reverse topological order and accumulates
// dLoss/dLeaf into every leaf that requires a gradient. Leaf gradients
// accumulate across backward() calls until zero_grad().
//
// Every forward op checks its output for NaN/Inf and throws NumericError.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace transmef {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <class T>
class BasicTensor {
 public:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until first accumulated into
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    // Reads this node's grad and accumulates into the inputs' grads.
    std::function<void(Node&)> backward;

    std::vector<T>& ensure_grad() {
      if (grad.empty()) grad.assign(value.size(), T(0));
      return grad;
    }
  };

  BasicTensor() = default;
  explicit BasicTensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  /// Throws ShapeError when the shape is empty, has a zero extent, or does
  /// not match values.size().
  static BasicTensor create(Shape shape, std::vector<T> values, bool requires_grad = false);
  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  /// In-place access for parameter updates and initialisation. Never mutate a
  /// tensor that is already part of a recorded graph.
  std::span<T> mutable_data() { return node_->value; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  /// Empty span when no gradient has been accumulated.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  /// Backpropagates from this scalar. Throws ShapeError when size() != 1.
  void backward() const;

  /// Same values, no graph history.
  BasicTensor detach() const;

  const char* op_name() const { return node_->op; }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using Tensor = BasicTensor<float>;

/// Thread-local switch; while disabled no graph is recorded.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// --- elementwise -----------------------------------------------------------
// Binary ops accept equal shapes or a single-element operand on either side.

template <class T> BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T> BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T> BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T> BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T> BasicTensor<T> add_scalar(const BasicTensor<T>& a, T value);
template <class T> BasicTensor<T> mul_scalar(const BasicTensor<T>& a, T value);
template <class T> BasicTensor<T> pow_scalar(const BasicTensor<T>& a, T exponent);
template <class T> BasicTensor<T> relu(const BasicTensor<T>& a);
/// tanh approximation: 0.5x(1 + tanh(sqrt(2/pi)(x + 0.044715x^3))).
template <class T> BasicTensor<T> gelu(const BasicTensor<T>& a);
template <class T> BasicTensor<T> exp(const BasicTensor<T>& a);
template <class T> BasicTensor<T> sigmoid(const BasicTensor<T>& a);
template <class T> BasicTensor<T> sqrt(const BasicTensor<T>& a);

// --- reductions (fixed left-to-right order) --------------------------------

template <class T> BasicTensor<T> sum(const BasicTensor<T>& a);
template <class T> BasicTensor<T> mean(const BasicTensor<T>& a);

// --- linear algebra --------------------------------------------------------

/// [m,k] x [k,n] -> [m,n]
template <class T> BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// 2-D transpose.
template <class T> BasicTensor<T> transpose(const BasicTensor<T>& a);
/// x[m,n] + bias[n] broadcast over rows.
template <class T> BasicTensor<T> add_row_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias);

/// Cross-correlation of x[C_in,H,W] with kernel[C_out,C_in,k,k] (square, odd
/// k) and zero padding; bias[C_out] is optional (pass an undefined tensor).
template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias, std::size_t padding);

/// Softmax along `axis`, max-subtracted.
template <class T> BasicTensor<T> softmax(const BasicTensor<T>& x, std::size_t axis);

/// Row-wise normalisation of x[m,d] followed by scale[d], shift[d].
template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& scale,
                          const BasicTensor<T>& shift, T eps);

// --- data movement ---------------------------------------------------------

template <class T> BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape);
/// out.flat[i] = x.flat[indices[i]]; gradient scatter-adds back.
template <class T>
BasicTensor<T> gather(const BasicTensor<T>& x, std::shared_ptr<const std::vector<std::size_t>> indices,
                      Shape shape);
template <class T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts, std::size_t axis);
template <class T>
BasicTensor<T> slice(const BasicTensor<T>& x, std::size_t axis, std::size_t start, std::size_t length);

}  // namespace transmef
