//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "solgraph/rng.hpp"

// Dense tensors and a reverse-mode gradient tape. Every op is recorded on the
// tape of its operands; `Tape::backward` replays the records in reverse.
// Instantiated for float (training, inference) and double (gradient checks).
namespace solgraph::ad {

enum class AutodiffErrorKind {
  kShapeMismatch,
  kNotScalarLoss,
  kTapeConsumed,
  kTapeMismatch,
  kInvalidArgument,
};

class AutodiffError : public std::runtime_error {
public:
  AutodiffError(AutodiffErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  AutodiffErrorKind kind() const { return kind_; }

private:
  AutodiffErrorKind kind_;
};

using Shape = std::vector<std::size_t>;

// Cache-line aligned storage. Vectorised kernels peel a prefix that depends on
// the base address, so unaligned buffers would make float sums vary per run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U> &) {}

  T *allocate(std::size_t n) {
    return static_cast<T *>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T *p, std::size_t) { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U> &) const {
    return true;
  }
};

std::string shape_string(const Shape &shape);

template <typename T>
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  using Storage = std::vector<T, AlignedAllocator<T>>;

  Tensor(Shape shape, const std::vector<T> &values);
  Tensor(Shape shape, Storage values);
  Tensor(Shape shape, std::initializer_list<T> values)
      : Tensor(std::move(shape), Storage(values)) {}

  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T{0}) {
    return Tensor(Shape{rows, cols}, fill);
  }

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  // Rank-1 tensors act as a single row; higher ranks fold leading extents.
  std::size_t rows() const;
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }

  T *data() { return values_.data(); }
  const T *data() const { return values_.data(); }
  Storage &values() { return values_; }
  const Storage &values() const { return values_; }

  T &operator[](std::size_t i) { return values_[i]; }
  T operator[](std::size_t i) const { return values_[i]; }
  T &at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  T at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, typename Tensor<U>::Storage(values_.begin(), values_.end()));
  }

  bool operator==(const Tensor &) const = default;

private:
  Shape shape_;
  Storage values_;
};

template <typename T>
class Tape;

// Handle to a tensor recorded on a tape.
template <typename T>
struct Var {
  Tape<T> *tape = nullptr;
  std::uint32_t index = 0;

  const Tensor<T> &value() const;
  const Shape &shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

template <typename T>
class Tape {
public:
  using Backward = std::function<void(Tape &, const Tensor<T> &grad_out)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  // Inputs and parameters. Gradients are kept only when `requires_grad`.
  Var<T> leaf(Tensor<T> value, bool requires_grad = true);
  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  Var<T> record(Tensor<T> value, std::span<const Var<T>> parents,
                Backward backward);
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents,
                Backward backward) {
    return record(std::move(value),
                  std::span<const Var<T>>(parents.begin(), parents.size()),
                  std::move(backward));
  }

  const Tensor<T> &value(std::uint32_t index) const {
    return nodes_[index].value;
  }
  bool requires_grad(std::uint32_t index) const {
    return nodes_[index].requires_grad;
  }

  // Gradient buffer of a node, zero-initialised on first use; nullptr when
  // the node does not require a gradient.
  Tensor<T> *grad_buffer(std::uint32_t index);

  // d loss / d var after `backward`; zeros for nodes the loss does not reach.
  Tensor<T> grad(Var<T> var) const;

  void backward(Var<T> loss);
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

template <typename T>
const Tensor<T> &Var<T>::value() const {
  return tape->value(index);
}

template <typename T>
using SparseMatrix = Eigen::SparseMatrix<T, Eigen::RowMajor, int>;

// Row ranges [offsets[g], offsets[g+1]) grouping rows by graph.
using Segments = std::vector<std::size_t>;

template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
// a + b, where b has a's shape or is a single row broadcast over a's rows.
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
// Elementwise product; b may be a broadcast row like in `add`.
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);
template <typename T> Var<T> relu(Var<T> a);
template <typename T> Var<T> sigmoid(Var<T> a);
template <typename T> Var<T> tanh(Var<T> a);
template <typename T> Var<T> exp(Var<T> a);
template <typename T> Var<T> softmax_rows(Var<T> a);
// Row-wise normalisation to zero mean / unit variance, then gamma * x + beta.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5));
// Inverted dropout; identity when !training or p == 0.
template <typename T>
Var<T> dropout(Var<T> x, T p, bool training, CounterRng &rng);
template <typename T> Var<T> concat_rows(std::span<const Var<T>> parts);
template <typename T> Var<T> concat_cols(std::span<const Var<T>> parts);
template <typename T>
Var<T> slice_cols(Var<T> a, std::size_t begin, std::size_t end);
template <typename T>
Var<T> gather_rows(Var<T> a, std::span<const std::size_t> rows);
template <typename T> Var<T> segment_sum(Var<T> a, const Segments &segments);
template <typename T> Var<T> segment_mean(Var<T> a, const Segments &segments);
// Repeats row g of a (one row per segment) over that segment's rows.
template <typename T>
Var<T> segment_broadcast(Var<T> a, const Segments &segments);
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> mean(Var<T> a);
template <typename T> Var<T> mse(Var<T> prediction, Var<T> target);
// Constant sparse matrix times a: (A a), gradient A^T g.
template <typename T>
Var<T> spmm(const SparseMatrix<T> &matrix, Var<T> a);

// Multi-head scaled dot-product self-attention restricted to segments:
// within each segment and head, softmax(Q K^T / sqrt(d_head)) V. Rows never
// attend across segment boundaries.
template <typename T>
Var<T> segment_attention(Var<T> q, Var<T> k, Var<T> v,
                         const Segments &segments, std::size_t heads);

// Attention weights of `segment_attention`, one row-major n x n block per
// (segment, head), segment-major.
template <typename T>
std::vector<Tensor<T>> segment_attention_weights(const Tensor<T> &q,
                                                 const Tensor<T> &k,
                                                 const Segments &segments,
                                                 std::size_t heads);

}  // namespace solgraph::ad
