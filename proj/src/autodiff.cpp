//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <Eigen/Core>

namespace solgraph::ad {

std::string shape_string(const Shape &shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

namespace {

std::size_t product(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
RowMap<T> mat(Tensor<T> &t) {
  return RowMap<T>(t.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

template <typename T>
ConstRowMap<T> mat(const Tensor<T> &t) {
  return ConstRowMap<T>(t.data(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(const char *op, const Shape &lhs,
                              const Shape &rhs) {
  throw AutodiffError(AutodiffErrorKind::kShapeMismatch,
                      std::string("ShapeMismatch in ") + op + ": " +
                          shape_string(lhs) + " vs " + shape_string(rhs));
}

[[noreturn]] void invalid(const std::string &what) {
  throw AutodiffError(AutodiffErrorKind::kInvalidArgument, what);
}

template <typename T>
Tape<T> &tape_of(Var<T> a) {
  if (a.tape == nullptr) invalid("variable is not bound to a tape");
  return *a.tape;
}

template <typename T>
Tape<T> &tape_of(Var<T> a, Var<T> b) {
  if (a.tape != b.tape) {
    throw AutodiffError(AutodiffErrorKind::kTapeMismatch,
                        "operands recorded on different tapes");
  }
  return tape_of(a);
}

template <typename T>
bool same_matrix_shape(const Tensor<T> &a, const Tensor<T> &b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

template <typename T>
bool is_row_broadcast(const Tensor<T> &a, const Tensor<T> &b) {
  return b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
}

void check_segments(const Segments &segments, std::size_t rows) {
  if (segments.empty() || segments.front() != 0 || segments.back() != rows) {
    invalid("segments do not partition the rows");
  }
  for (std::size_t g = 1; g < segments.size(); ++g) {
    if (segments[g] < segments[g - 1]) invalid("segments must be ordered");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(std::move(shape)), values_(product(shape_), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, const std::vector<T> &values)
    : Tensor(std::move(shape), Storage(values.begin(), values.end())) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, Storage values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != product(shape_)) {
    throw AutodiffError(AutodiffErrorKind::kShapeMismatch,
                        "ShapeMismatch: " + std::to_string(values_.size()) +
                            " values for shape " + shape_string(shape_));
  }
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  if (shape_.size() <= 1) return 1;
  return values_.size() / std::max<std::size_t>(shape_.back(), 1);
}

// ---------------------------------------------------------------------------
// Tape

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::span<const Var<T>> parents,
                       Backward backward) {
  if (consumed_) {
    throw AutodiffError(AutodiffErrorKind::kTapeConsumed,
                        "TapeConsumed: cannot record after backward");
  }
  bool needs = false;
  for (const Var<T> &p : parents) {
    if (p.tape != this) {
      throw AutodiffError(AutodiffErrorKind::kTapeMismatch,
                          "operands recorded on different tapes");
    }
    needs = needs || nodes_[p.index].requires_grad;
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Tensor<T> *Tape<T>::grad_buffer(std::uint32_t index) {
  Node &node = nodes_[index];
  if (!node.requires_grad) return nullptr;
  if (!node.has_grad) {
    node.grad = Tensor<T>(node.value.shape(), T{0});
    node.has_grad = true;
  }
  return &node.grad;
}

template <typename T>
Tensor<T> Tape<T>::grad(Var<T> var) const {
  const Node &node = nodes_.at(var.index);
  if (node.has_grad) return node.grad;
  return Tensor<T>(node.value.shape(), T{0});
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) {
    throw AutodiffError(AutodiffErrorKind::kTapeMismatch,
                        "loss belongs to another tape");
  }
  if (consumed_) {
    throw AutodiffError(AutodiffErrorKind::kTapeConsumed,
                        "TapeConsumed: backward already ran on this tape");
  }
  if (nodes_[loss.index].value.size() != 1) {
    throw AutodiffError(AutodiffErrorKind::kNotScalarLoss,
                        "NotScalarLoss: loss has shape " +
                            shape_string(nodes_[loss.index].value.shape()));
  }
  consumed_ = true;
  Tensor<T> *seed = grad_buffer(loss.index);
  if (seed == nullptr) return;
  (*seed)[0] = T{1};
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node &node = nodes_[i];
    if (!node.has_grad || !node.backward) continue;
    node.backward(*this, node.grad);
  }
}

// ---------------------------------------------------------------------------
// Ops

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T> &tape = tape_of(a, b);
  const Tensor<T> &A = a.value();
  const Tensor<T> &B = b.value();
  if (A.cols() != B.rows()) shape_error("matmul", A.shape(), B.shape());
  Tensor<T> out = Tensor<T>::matrix(A.rows(), B.cols());
  mat(out).noalias() = mat(A) * mat(B);
  const auto ai = a.index;
  const auto bi = b.index;
  return tape.record(std::move(out), {a, b},
                     [ai, bi](Tape<T> &t, const Tensor<T> &g) {
                       if (Tensor<T> *ga = t.grad_buffer(ai)) {
                         mat(*ga).noalias() +=
                             mat(g) * mat(t.value(bi)).transpose();
                       }
                       if (Tensor<T> *gb = t.grad_buffer(bi)) {
                         mat(*gb).noalias() +=
                             mat(t.value(ai)).transpose() * mat(g);
                       }
                     });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T> &tape = tape_of(a, b);
  const Tensor<T> &A = a.value();
  const Tensor<T> &B = b.value();
  const bool broadcast = is_row_broadcast(A, B);
  if (!broadcast && !same_matrix_shape(A, B)) {
    shape_error("add", A.shape(), B.shape());
  }
  Tensor<T> out = A;
  if (broadcast) {
    mat(out).rowwise() += mat(B).row(0);
  } else {
    mat(out) += mat(B);
  }
  const auto ai = a.index;
  const auto bi = b.index;
  return tape.record(std::move(out), {a, b},
                     [ai, bi, broadcast](Tape<T> &t, const Tensor<T> &g) {
                       if (Tensor<T> *ga = t.grad_buffer(ai)) mat(*ga) += mat(g);
                       if (Tensor<T> *gb = t.grad_buffer(bi)) {
                         if (broadcast) {
                           mat(*gb).row(0) += mat(g).colwise().sum();
                         } else {
                           mat(*gb) += mat(g);
                         }
                       }
                     });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  Tape<T> &tape = tape_of(a, b);
  const Tensor<T> &A = a.value();
  const Tensor<T> &B = b.value();
  const bool broadcast = is_row_broadcast(A, B);
  if (!broadcast && !same_matrix_shape(A, B)) {
    shape_error("sub", A.shape(), B.shape());
  }
  Tensor<T> out = A;
  if (broadcast) {
    mat(out).rowwise() -= mat(B).row(0);
  } else {
    mat(out) -= mat(B);
  }
  const auto ai = a.index;
  const auto bi = b.index;
  return tape.record(std::move(out), {a, b},
                     [ai, bi, broadcast](Tape<T> &t, const Tensor<T> &g) {
                       if (Tensor<T> *ga = t.grad_buffer(ai)) mat(*ga) += mat(g);
                       if (Tensor<T> *gb = t.grad_buffer(bi)) {
                         if (broadcast) {
                           mat(*gb).row(0) -= mat(g).colwise().sum();
                         } else {
                           mat(*gb) -= mat(g);
                         }
                       }
                     });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T> &tape = tape_of(a, b);
  const Tensor<T> &A = a.value();
  const Tensor<T> &B = b.value();
  const bool broadcast = is_row_broadcast(A, B);
  if (!broadcast && !same_matrix_shape(A, B)) {
    shape_error("mul", A.shape(), B.shape());
  }
  Tensor<T> out = A;
  if (broadcast) {
    mat(out).array().rowwise() *= mat(B).row(0).array();
  } else {
    mat(out).array() *= mat(B).array();
  }
  const auto ai = a.index;
  const auto bi = b.index;
  return tape.record(
      std::move(out), {a, b}, [ai, bi, broadcast](Tape<T> &t, const Tensor<T> &g) {
        const Tensor<T> &Av = t.value(ai);
        const Tensor<T> &Bv = t.value(bi);
        if (Tensor<T> *ga = t.grad_buffer(ai)) {
          if (broadcast) {
            mat(*ga).array() +=
                mat(g).array().rowwise() * mat(Bv).row(0).array();
          } else {
            mat(*ga).array() += mat(g).array() * mat(Bv).array();
          }
        }
        if (Tensor<T> *gb = t.grad_buffer(bi)) {
          if (broadcast) {
            mat(*gb).row(0) +=
                (mat(g).array() * mat(Av).array()).matrix().colwise().sum();
          } else {
            mat(*gb).array() += mat(g).array() * mat(Av).array();
          }
        }
      });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tape<T> &tape = tape_of(a);
  Tensor<T> out = a.value();
  mat(out) *= factor;
  const auto ai = a.index;
  return tape.record(std::move(out), {a},
                     [ai, factor](Tape<T> &t, const Tensor<T> &g) {
                       if (Tensor<T> *ga = t.grad_buffer(ai))
                         mat(*ga) += factor * mat(g);
                     });
}

namespace {

// Shared shape of unary elementwise ops whose derivative is a function of
// the input x and output y.
template <typename T, typename Fwd, typename Deriv>
Var<T> unary(Var<T> a, Fwd fwd, Deriv deriv) {
  Tape<T> &tape = tape_of(a);
  const Tensor<T> &A = a.value();
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = fwd(A[i]);
  const auto ai = a.index;
  const auto self = static_cast<std::uint32_t>(tape.size());
  return tape.record(std::move(out), {a},
                     [ai, self, deriv](Tape<T> &t, const Tensor<T> &g) {
                       Tensor<T> *ga = t.grad_buffer(ai);
                       if (ga == nullptr) return;
                       const Tensor<T> &x = t.value(ai);
                       const Tensor<T> &y = t.value(self);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         (*ga)[i] += g[i] * deriv(x[i], y[i]);
                       }
                     });
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace

template <typename T>
Var<T> relu(Var<T> a) {
  return unary(
      a, [](T x) { return x > T{0} ? x : T{0}; },
      [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  return unary(
      a, [](T x) { return stable_sigmoid(x); },
      [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  return unary(
      a, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Var<T> exp(Var<T> a) {
  return unary(
      a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> softmax_rows(Var<T> a) {
  Tape<T> &tape = tape_of(a);
  const Tensor<T> &A = a.value();
  Tensor<T> out(A.shape());
  const std::size_t rows = A.rows();
  const std::size_t cols = A.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const T *x = A.data() + r * cols;
    T *y = out.data() + r * cols;
    const T mx = *std::max_element(x, x + cols);
    T total{0};
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  const auto ai = a.index;
  const auto self = static_cast<std::uint32_t>(tape.size());
  return tape.record(std::move(out), {a},
                     [ai, self, rows, cols](Tape<T> &t, const Tensor<T> &g) {
                       Tensor<T> *ga = t.grad_buffer(ai);
                       if (ga == nullptr) return;
                       const Tensor<T> &y = t.value(self);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const T *yr = y.data() + r * cols;
                         const T *gr = g.data() + r * cols;
                         T dot{0};
                         for (std::size_t c = 0; c < cols; ++c)
                           dot += gr[c] * yr[c];
                         T *out_r = ga->data() + r * cols;
                         for (std::size_t c = 0; c < cols; ++c)
                           out_r[c] += yr[c] * (gr[c] - dot);
                       }
                     });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  Tape<T> &tape = tape_of(x, gamma);
  tape_of(x, beta);
  const Tensor<T> &X = x.value();
  const std::size_t rows = X.rows();
  const std::size_t cols = X.cols();
  if (gamma.value().size() != cols || beta.value().size() != cols) {
    shape_error("layer_norm", X.shape(), gamma.value().shape());
  }
  auto xhat = std::make_shared<Tensor<T>>(X.shape());
  auto rstd = std::make_shared<std::vector<T>>(rows);
  Tensor<T> out(X.shape());
  const T *gm = gamma.value().data();
  const T *bt = beta.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T *xr = X.data() + r * cols;
    T mu{0};
    for (std::size_t c = 0; c < cols; ++c) mu += xr[c];
    mu /= static_cast<T>(cols);
    T var{0};
    for (std::size_t c = 0; c < cols; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<T>(cols);
    const T rs = T{1} / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t c = 0; c < cols; ++c) {
      const T h = (xr[c] - mu) * rs;
      xhat->at(r, c) = h;
      out.at(r, c) = gm[c] * h + bt[c];
    }
  }
  const auto xi = x.index;
  const auto gi = gamma.index;
  const auto bi = beta.index;
  return tape.record(
      std::move(out), {x, gamma, beta},
      [xi, gi, bi, xhat, rstd, rows, cols](Tape<T> &t, const Tensor<T> &g) {
        const T *gm = t.value(gi).data();
        if (Tensor<T> *gb = t.grad_buffer(bi)) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) (*gb)[c] += g.at(r, c);
        }
        if (Tensor<T> *gg = t.grad_buffer(gi)) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
              (*gg)[c] += g.at(r, c) * xhat->at(r, c);
        }
        Tensor<T> *gx = t.grad_buffer(xi);
        if (gx == nullptr) return;
        std::vector<T> dh(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          T mean_dh{0};
          T mean_dh_h{0};
          for (std::size_t c = 0; c < cols; ++c) {
            dh[c] = g.at(r, c) * gm[c];
            mean_dh += dh[c];
            mean_dh_h += dh[c] * xhat->at(r, c);
          }
          mean_dh /= static_cast<T>(cols);
          mean_dh_h /= static_cast<T>(cols);
          for (std::size_t c = 0; c < cols; ++c) {
            gx->at(r, c) +=
                (*rstd)[r] * (dh[c] - mean_dh - xhat->at(r, c) * mean_dh_h);
          }
        }
      });
}

template <typename T>
Var<T> dropout(Var<T> x, T p, bool training, CounterRng &rng) {
  if (!(p >= T{0} && p < T{1})) invalid("dropout rate must be in [0, 1)");
  if (!training || p == T{0}) return x;
  Tape<T> &tape = tape_of(x);
  const Tensor<T> &X = x.value();
  auto mask = std::make_shared<std::vector<T>>(X.size());
  const T keep = T{1} / (T{1} - p);
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    (*mask)[i] = rng.uniform() >= static_cast<double>(p) ? keep : T{0};
    out[i] = X[i] * (*mask)[i];
  }
  const auto xi = x.index;
  return tape.record(std::move(out), {x},
                     [xi, mask](Tape<T> &t, const Tensor<T> &g) {
                       Tensor<T> *gx = t.grad_buffer(xi);
                       if (gx == nullptr) return;
                       for (std::size_t i = 0; i < g.size(); ++i)
                         (*gx)[i] += g[i] * (*mask)[i];
                     });
}


template <typename T>
Var<T> concat_rows(std::span<const Var<T>> parts) {
  if (parts.empty()) invalid("concat_rows of nothing");
  Tape<T> &tape = tape_of(parts.front());
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var<T> &p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts.front().shape(), p.shape());
    rows += p.rows();
  }
  Tensor<T> out = Tensor<T>::matrix(rows, cols);
  std::vector<std::uint32_t> ids;
  std::size_t offset = 0;
  for (const Var<T> &p : parts) {
    const Tensor<T> &v = p.value();
    std::copy(v.values().begin(), v.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(offset * cols));
    offset += v.rows();
    ids.push_back(p.index);
  }
  return tape.record(
      std::move(out), parts, [ids, cols](Tape<T> &t, const Tensor<T> &g) {
        std::size_t offset = 0;
        for (std::uint32_t id : ids) {
          const std::size_t n = t.value(id).size();
          if (Tensor<T> *gp = t.grad_buffer(id)) {
            for (std::size_t i = 0; i < n; ++i)
              (*gp)[i] += g[offset * cols + i];
          }
          offset += n / cols;
        }
      });
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) invalid("concat_cols of nothing");
  Tape<T> &tape = tape_of(parts.front());
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var<T> &p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts.front().shape(), p.shape());
    cols += p.cols();
  }
  Tensor<T> out = Tensor<T>::matrix(rows, cols);
  std::vector<std::uint32_t> ids;
  std::size_t offset = 0;
  for (const Var<T> &p : parts) {
    const Tensor<T> &v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c)
        out.at(r, offset + c) = v.at(r, c);
    offset += v.cols();
    ids.push_back(p.index);
  }
  return tape.record(std::move(out), parts,
                        [ids, rows, cols](Tape<T> &t, const Tensor<T> &g) {
                          std::size_t offset = 0;
                          for (std::uint32_t id : ids) {
                            const std::size_t w = t.value(id).cols();
                            if (Tensor<T> *gp = t.grad_buffer(id)) {
                              for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t c = 0; c < w; ++c)
                                  gp->at(r, c) += g[r * cols + offset + c];
                            }
                            offset += w;
                          }
                        });
}

template <typename T>
Var<T> slice_cols(Var<T> a, std::size_t begin, std::size_t end) {
  Tape<T> &tape = tape_of(a);
  const Tensor<T> &A = a.value();
  if (begin > end || end > A.cols()) {
    invalid("slice_cols [" + std::to_string(begin) + ", " +
            std::to_string(end) + ") out of " + shape_string(A.shape()));
  }
  const std::size_t rows = A.rows();
  const std::size_t width = end - begin;
  const std::size_t cols = A.cols();
  Tensor<T> out = Tensor<T>::matrix(rows, width);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(A.data() + r * cols + begin, width, out.data() + r * width);
  const auto ai = a.index;
  return tape.record(std::move(out), {a},
                     [ai, begin, width, rows, cols](Tape<T> &t,
                                                    const Tensor<T> &g) {
                       Tensor<T> *ga = t.grad_buffer(ai);
                       if (ga == nullptr) return;
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < width; ++c)
                           (*ga)[r * cols + begin + c] += g[r * width + c];
                     });
}

template <typename T>
Var<T> gather_rows(Var<T> a, std::span<const std::size_t> rows) {
  Tape<T> &tape = tape_of(a);
  const Tensor<T> &A = a.value();
  const std::size_t cols = A.cols();
  Tensor<T> out = Tensor<T>::matrix(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= A.rows()) invalid("gather_rows index out of range");
    std::copy_n(A.data() + rows[i] * cols, cols, out.data() + i * cols);
  }
  const auto ai = a.index;
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return tape.record(std::move(out), {a},
                     [ai, idx, cols](Tape<T> &t, const Tensor<T> &g) {
                       Tensor<T> *ga = t.grad_buffer(ai);
                       if (ga == nullptr) return;
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         for (std::size_t c = 0; c < cols; ++c)
                           (*ga)[idx[i] * cols + c] += g[i * cols + c];
                     });
}

namespace {

template <typename T>
Var<T> segment_reduce(Var<T> a, const Segments &segments, bool average) {
  Tape<T> &tape = tape_of(a);
  const Tensor<T> &A = a.value();
  check_segments(segments, A.rows());
  const std::size_t groups = segments.size() - 1;
  const std::size_t cols = A.cols();
  Tensor<T> out = Tensor<T>::matrix(groups, cols);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t count = segments[g + 1] - segments[g];
    if (average && count == 0) invalid("segment_mean over an empty segment");
    for (std::size_t r = segments[g]; r < segments[g + 1]; ++r)
      for (std::size_t c = 0; c < cols; ++c) out.at(g, c) += A.at(r, c);
    if (average) {
      for (std::size_t c = 0; c < cols; ++c)
        out.at(g, c) /= static_cast<T>(count);
    }
  }
  const auto ai = a.index;
  return tape.record(
      std::move(out), {a},
      [ai, segments, cols, average](Tape<T> &t, const Tensor<T> &g) {
        Tensor<T> *ga = t.grad_buffer(ai);
        if (ga == nullptr) return;
        for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
          const std::size_t count = segments[s + 1] - segments[s];
          const T w = average ? T{1} / static_cast<T>(count) : T{1};
          for (std::size_t r = segments[s]; r < segments[s + 1]; ++r)
            for (std::size_t c = 0; c < cols; ++c)
              ga->at(r, c) += w * g[s * cols + c];
        }
      });
}

}  // namespace

template <typename T>
Var<T> segment_sum(Var<T> a, const Segments &segments) {
  return segment_reduce(a, segments, false);
}

template <typename T>
Var<T> segment_mean(Var<T> a, const Segments &segments) {
  return segment_reduce(a, segments, true);
}

template <typename T>
Var<T> segment_broadcast(Var<T> a, const Segments &segments) {
  Tape<T> &tape = tape_of(a);
  const Tensor<T> &A = a.value();
  if (segments.size() != A.rows() + 1) invalid("one row per segment expected");
  check_segments(segments, segments.back());
  const std::size_t cols = A.cols();
  Tensor<T> out = Tensor<T>::matrix(segments.back(), cols);
  for (std::size_t s = 0; s + 1 < segments.size(); ++s)
    for (std::size_t r = segments[s]; r < segments[s + 1]; ++r)
      std::copy_n(A.data() + s * cols, cols, out.data() + r * cols);
  const auto ai = a.index;
  return tape.record(std::move(out), {a},
                     [ai, segments, cols](Tape<T> &t, const Tensor<T> &g) {
                       Tensor<T> *ga = t.grad_buffer(ai);
                       if (ga == nullptr) return;
                       for (std::size_t s = 0; s + 1 < segments.size(); ++s)
                         for (std::size_t r = segments[s]; r < segments[s + 1];
                              ++r)
                           for (std::size_t c = 0; c < cols; ++c)
                             (*ga)[s * cols + c] += g[r * cols + c];
                     });
}

template <typename T>
Var<T> sum(Var<T> a) {
  Tape<T> &tape = tape_of(a);
  const Tensor<T> &A = a.value();
  Tensor<T> out = Tensor<T>::matrix(1, 1);
  out[0] = std::accumulate(A.values().begin(), A.values().end(), T{0});
  const auto ai = a.index;
  return tape.record(std::move(out), {a}, [ai](Tape<T> &t, const Tensor<T> &g) {
    Tensor<T> *ga = t.grad_buffer(ai);
    if (ga == nullptr) return;
    for (T &v : ga->values()) v += g[0];
  });
}

template <typename T>
Var<T> mean(Var<T> a) {
  const std::size_t n = a.value().size();
  if (n == 0) invalid("mean of an empty tensor");
  return scale(sum(a), T{1} / static_cast<T>(n));
}

template <typename T>
Var<T> mse(Var<T> prediction, Var<T> target) {
  Tape<T> &tape = tape_of(prediction, target);
  const Tensor<T> &P = prediction.value();
  const Tensor<T> &Y = target.value();
  if (P.size() != Y.size() || P.size() == 0) {
    shape_error("mse", P.shape(), Y.shape());
  }
  const std::size_t n = P.size();
  Tensor<T> out = Tensor<T>::matrix(1, 1);
  for (std::size_t i = 0; i < n; ++i) out[0] += (P[i] - Y[i]) * (P[i] - Y[i]);
  out[0] /= static_cast<T>(n);
  const auto pi = prediction.index;
  const auto yi = target.index;
  return tape.record(std::move(out), {prediction, target},
                     [pi, yi, n](Tape<T> &t, const Tensor<T> &g) {
                       const Tensor<T> &Pv = t.value(pi);
                       const Tensor<T> &Yv = t.value(yi);
                       const T w = T{2} * g[0] / static_cast<T>(n);
                       Tensor<T> *gp = t.grad_buffer(pi);
                       Tensor<T> *gy = t.grad_buffer(yi);
                       for (std::size_t i = 0; i < n; ++i) {
                         const T d = w * (Pv[i] - Yv[i]);
                         if (gp != nullptr) (*gp)[i] += d;
                         if (gy != nullptr) (*gy)[i] -= d;
                       }
                     });
}

template <typename T>
Var<T> spmm(const SparseMatrix<T> &matrix, Var<T> a) {
  Tape<T> &tape = tape_of(a);
  const Tensor<T> &A = a.value();
  if (static_cast<std::size_t>(matrix.cols()) != A.rows()) {
    shape_error("spmm",
                Shape{static_cast<std::size_t>(matrix.rows()),
                      static_cast<std::size_t>(matrix.cols())},
                A.shape());
  }
  Tensor<T> out = Tensor<T>::matrix(static_cast<std::size_t>(matrix.rows()),
                                    A.cols());
  mat(out).noalias() = matrix * mat(A);
  auto held = std::make_shared<const SparseMatrix<T>>(matrix);
  const auto ai = a.index;
  return tape.record(std::move(out), {a},
                     [ai, held](Tape<T> &t, const Tensor<T> &g) {
                       Tensor<T> *ga = t.grad_buffer(ai);
                       if (ga == nullptr) return;
                       mat(*ga).noalias() += held->transpose() * mat(g);
                     });
}

template <typename T>
std::vector<Tensor<T>> segment_attention_weights(const Tensor<T> &q,
                                                 const Tensor<T> &k,
                                                 const Segments &segments,
                                                 std::size_t heads) {
  if (!same_matrix_shape(q, k)) shape_error("attention", q.shape(), k.shape());
  const std::size_t width = q.cols();
  if (heads == 0 || width % heads != 0) {
    invalid("attention width not divisible by heads");
  }
  check_segments(segments, q.rows());
  const std::size_t dh = width / heads;
  const T factor = T{1} / std::sqrt(static_cast<T>(dh));
  const auto stride = static_cast<Eigen::Index>(width);
  std::vector<Tensor<T>> out;
  for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
    const std::size_t begin = segments[s];
    const auto n = static_cast<Eigen::Index>(segments[s + 1] - begin);
    for (std::size_t h = 0; h < heads; ++h) {
      ConstStridedMap<T> Q(q.data() + begin * width + h * dh, n,
                           static_cast<Eigen::Index>(dh),
                           Eigen::OuterStride<>(stride));
      ConstStridedMap<T> K(k.data() + begin * width + h * dh, n,
                           static_cast<Eigen::Index>(dh),
                           Eigen::OuterStride<>(stride));
      Tensor<T> p = Tensor<T>::matrix(static_cast<std::size_t>(n),
                                      static_cast<std::size_t>(n));
      auto P = mat(p);
      P.noalias() = factor * (Q * K.transpose());
      for (Eigen::Index r = 0; r < n; ++r) {
        const T mx = P.row(r).maxCoeff();
        P.row(r) = (P.row(r).array() - mx).exp().matrix();
        P.row(r) /= P.row(r).sum();
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

template <typename T>
Var<T> segment_attention(Var<T> q, Var<T> k, Var<T> v,
                         const Segments &segments, std::size_t heads) {
  Tape<T> &tape = tape_of(q, k);
  tape_of(q, v);
  const Tensor<T> &Qt = q.value();
  const Tensor<T> &Kt = k.value();
  const Tensor<T> &Vt = v.value();
  if (!same_matrix_shape(Qt, Vt)) shape_error("attention", Qt.shape(), Vt.shape());
  auto weights = std::make_shared<std::vector<Tensor<T>>>(
      segment_attention_weights(Qt, Kt, segments, heads));

  const std::size_t width = Qt.cols();
  const std::size_t dh = width / heads;
  const auto stride = static_cast<Eigen::Index>(width);
  const auto edh = static_cast<Eigen::Index>(dh);
  Tensor<T> out = Tensor<T>::matrix(Qt.rows(), width);
  std::size_t block = 0;
  for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
    const std::size_t begin = segments[s];
    const auto n = static_cast<Eigen::Index>(segments[s + 1] - begin);
    for (std::size_t h = 0; h < heads; ++h, ++block) {
      const std::size_t off = begin * width + h * dh;
      ConstStridedMap<T> V(Vt.data() + off, n, edh, Eigen::OuterStride<>(stride));
      StridedMap<T> O(out.data() + off, n, edh, Eigen::OuterStride<>(stride));
      O.noalias() = mat((*weights)[block]) * V;
    }
  }

  const auto qi = q.index;
  const auto ki = k.index;
  const auto vi = v.index;
  return tape.record(
      std::move(out), {q, k, v},
      [qi, ki, vi, weights, segments, heads, width, dh, stride,
       edh](Tape<T> &t, const Tensor<T> &g) {
        const T factor = T{1} / std::sqrt(static_cast<T>(dh));
        const Tensor<T> &Qv = t.value(qi);
        const Tensor<T> &Kv = t.value(ki);
        const Tensor<T> &Vv = t.value(vi);
        Tensor<T> *gq = t.grad_buffer(qi);
        Tensor<T> *gk = t.grad_buffer(ki);
        Tensor<T> *gv = t.grad_buffer(vi);
        std::size_t block = 0;
        for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
          const std::size_t begin = segments[s];
          const auto n = static_cast<Eigen::Index>(segments[s + 1] - begin);
          for (std::size_t h = 0; h < heads; ++h, ++block) {
            const std::size_t off = begin * width + h * dh;
            const Eigen::OuterStride<> os(stride);
            ConstStridedMap<T> G(g.data() + off, n, edh, os);
            ConstStridedMap<T> Q(Qv.data() + off, n, edh, os);
            ConstStridedMap<T> K(Kv.data() + off, n, edh, os);
            ConstStridedMap<T> V(Vv.data() + off, n, edh, os);
            const auto P = mat((*weights)[block]);
            if (gv != nullptr) {
              StridedMap<T> GV(gv->data() + off, n, edh, os);
              GV.noalias() += P.transpose() * G;
            }
            if (gq == nullptr && gk == nullptr) continue;
            RowMat<T> dP = G * V.transpose();
            const Eigen::Matrix<T, Eigen::Dynamic, 1> rowdot =
                (dP.array() * P.array()).rowwise().sum();
            RowMat<T> dS =
                (P.array() * (dP.colwise() - rowdot).array()).matrix() * factor;
            if (gq != nullptr) {
              StridedMap<T> GQ(gq->data() + off, n, edh, os);
              GQ.noalias() += dS * K;
            }
            if (gk != nullptr) {
              StridedMap<T> GK(gk->data() + off, n, edh, os);
              GK.noalias() += dS.transpose() * Q;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Instantiations

#define SOLGRAPH_AD_INSTANTIATE(T)                                             \
  template class Tensor<T>;                                                    \
  template class Tape<T>;                                                      \
  template Var<T> matmul(Var<T>, Var<T>);                                      \
  template Var<T> add(Var<T>, Var<T>);                                         \
  template Var<T> sub(Var<T>, Var<T>);                                         \
  template Var<T> mul(Var<T>, Var<T>);                                         \
  template Var<T> scale(Var<T>, T);                                            \
  template Var<T> relu(Var<T>);                                                \
  template Var<T> sigmoid(Var<T>);                                             \
  template Var<T> tanh(Var<T>);                                                \
  template Var<T> exp(Var<T>);                                                 \
  template Var<T> softmax_rows(Var<T>);                                        \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                       \
  template Var<T> dropout(Var<T>, T, bool, CounterRng &);                      \
  template Var<T> concat_rows(std::span<const Var<T>>);                        \
  template Var<T> concat_cols(std::span<const Var<T>>);                        \
  template Var<T> slice_cols(Var<T>, std::size_t, std::size_t);                \
  template Var<T> gather_rows(Var<T>, std::span<const std::size_t>);           \
  template Var<T> segment_sum(Var<T>, const Segments &);                       \
  template Var<T> segment_mean(Var<T>, const Segments &);                      \
  template Var<T> segment_broadcast(Var<T>, const Segments &);                 \
  template Var<T> sum(Var<T>);                                                 \
  template Var<T> mean(Var<T>);                                                \
  template Var<T> mse(Var<T>, Var<T>);                                         \
  template Var<T> spmm(const SparseMatrix<T> &, Var<T>);                       \
  template Var<T> segment_attention(Var<T>, Var<T>, Var<T>, const Segments &,  \
                                    std::size_t);                              \
  template std::vector<Tensor<T>> segment_attention_weights(                   \
      const Tensor<T> &, const Tensor<T> &, const Segments &, std::size_t);

SOLGRAPH_AD_INSTANTIATE(float)
SOLGRAPH_AD_INSTANTIATE(double)

}  // namespace solgraph::ad
