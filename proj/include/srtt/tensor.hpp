#pragma once

#include "srtt/common.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

namespace srtt {

// Dense tensors are stored flat with the first index running fastest:
// the entry with (1-based) multi-index i lives at linear_index(i, shape) - 1.
// Fixing this map once makes every mode-k fiber a strided slice of the flat
// data with stride equal to the product of the leading k dimensions.

/// Extents of an order-d tensor. Validates positivity and guards the total
/// element count against Index overflow.
class Shape {
 public:
  Shape() = default;

  explicit Shape(std::vector<Index> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("Shape: order must be >= 1");
    strides_.resize(dims_.size());
    total_ = 1;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (dims_[k] < 1) throw std::invalid_argument("Shape: dimensions must be >= 1");
      strides_[k] = total_;
      if (total_ > std::numeric_limits<Index>::max() / dims_[k])
        throw std::invalid_argument("Shape: element count overflows Index");
      total_ *= dims_[k];
    }
  }

  Shape(std::initializer_list<Index> dims) : Shape(std::vector<Index>(dims)) {}

  static Shape uniform(Index order, Index n) {
    return Shape(std::vector<Index>(static_cast<std::size_t>(order), n));
  }

  Index order() const { return static_cast<Index>(dims_.size()); }
  Index dim(Index k) const { return dims_[static_cast<std::size_t>(k)]; }
  Index operator[](Index k) const { return dim(k); }
  const std::vector<Index>& dims() const { return dims_; }

  Index num_elements() const { return total_; }

  /// Stride of mode k in the flat layout (product of dimensions before k).
  Index stride(Index k) const { return strides_[static_cast<std::size_t>(k)]; }

  /// Product of all dimensions except mode k.
  Index elements_excluding(Index k) const { return total_ / dim(k); }

  bool operator==(const Shape& other) const { return dims_ == other.dims_; }
  bool operator!=(const Shape& other) const { return !(*this == other); }

  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (k) os << 'x';
      os << dims_[k];
    }
    return os.str();
  }

 private:
  std::vector<Index> dims_;
  std::vector<Index> strides_;
  Index total_ = 1;
};

/// 1-based multi-index, the argument of the linear index map below.
using MultiIndex = std::vector<Index>;

/// Sorted set of distinct modes, 0-based, subset of [0, d).
class ModeSet {
 public:
  explicit ModeSet(std::vector<Index> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw std::invalid_argument("ModeSet: must be non-empty");
    std::sort(modes_.begin(), modes_.end());
    if (std::adjacent_find(modes_.begin(), modes_.end()) != modes_.end())
      throw std::invalid_argument("ModeSet: modes must be distinct");
    if (modes_.front() < 0) throw std::invalid_argument("ModeSet: modes must be >= 0");
  }

  ModeSet(std::initializer_list<Index> modes) : ModeSet(std::vector<Index>(modes)) {}

  static ModeSet single(Index mode) { return ModeSet({mode}); }

  Index size() const { return static_cast<Index>(modes_.size()); }
  Index operator[](Index i) const { return modes_[static_cast<std::size_t>(i)]; }
  const std::vector<Index>& modes() const { return modes_; }
  auto begin() const { return modes_.begin(); }
  auto end() const { return modes_.end(); }

  bool contains(Index mode) const {
    return std::binary_search(modes_.begin(), modes_.end(), mode);
  }

  /// Modes of [0, order) not in this set, ascending.
  std::vector<Index> complement(Index order) const {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(order - size()));
    for (Index k = 0; k < order; ++k)
      if (!contains(k)) out.push_back(k);
    return out;
  }

  void validate_for_order(Index order) const {
    if (modes_.back() >= order)
      throw std::invalid_argument("ModeSet: mode out of range for order " +
                                  std::to_string(order));
  }

  bool operator==(const ModeSet& other) const { return modes_ == other.modes_; }

  std::string to_string() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      if (i) os << ',';
      os << modes_[i];
    }
    os << '}';
    return os.str();
  }

 private:
  std::vector<Index> modes_;
};

/// Linear index map: 1-based multi-index to 1-based flat position, first
/// index fastest. This is the single linearization convention used
/// everywhere (storage, unfoldings, vectorization).
inline Index linear_index(const MultiIndex& idx, const Shape& shape) {
  if (static_cast<Index>(idx.size()) != shape.order())
    throw std::invalid_argument("linear_index: order mismatch");
  Index flat = 1;
  for (Index k = 0; k < shape.order(); ++k) {
    const Index ik = idx[static_cast<std::size_t>(k)];
    if (ik < 1 || ik > shape.dim(k))
      throw std::out_of_range("linear_index: index out of range in mode " +
                              std::to_string(k));
    flat += (ik - 1) * shape.stride(k);
  }
  return flat;
}

/// Inverse of linear_index.
inline MultiIndex tuple_index(Index flat, const Shape& shape) {
  if (flat < 1 || flat > shape.num_elements())
    throw std::out_of_range("tuple_index: flat index out of range");
  MultiIndex idx(static_cast<std::size_t>(shape.order()));
  for (Index k = 0; k < shape.order(); ++k) {
    const Index g = shape.stride(k);
    idx[static_cast<std::size_t>(k)] = 1 + ((flat - 1) % (shape.dim(k) * g)) / g;
  }
  return idx;
}

/// Order-d dense tensor of real values. Immutable after construction by
/// convention: all const member functions are safe to call concurrently.
template <class Scalar>
class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(Shape shape)
      : shape_(std::move(shape)),
        data_(Vector<Scalar>::Zero(shape_.num_elements())) {}

  DenseTensor(Shape shape, Vector<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.num_elements())
      throw std::invalid_argument("DenseTensor: data length does not match shape");
  }

  const Shape& shape() const { return shape_; }
  Index order() const { return shape_.order(); }
  Index dim(Index k) const { return shape_.dim(k); }
  Index size() const { return data_.size(); }

  const Scalar* data() const { return data_.data(); }
  Scalar* data() { return data_.data(); }

  Scalar operator[](Index flat) const { return data_[flat]; }
  Scalar& operator[](Index flat) { return data_[flat]; }

  /// Element access by 0-based per-mode indices.
  Scalar at(std::span<const Index> idx) const { return data_[offset(idx)]; }
  Scalar& at(std::span<const Index> idx) { return data_[offset(idx)]; }

  template <class... Ix>
  Scalar operator()(Ix... idx) const {
    const Index buf[] = {static_cast<Index>(idx)...};
    return at(std::span<const Index>(buf, sizeof...(Ix)));
  }

  template <class... Ix>
  Scalar& operator()(Ix... idx) {
    const Index buf[] = {static_cast<Index>(idx)...};
    return at(std::span<const Index>(buf, sizeof...(Ix)));
  }

  Eigen::Map<const Vector<Scalar>> vec() const {
    return Eigen::Map<const Vector<Scalar>>(data_.data(), data_.size());
  }
  Eigen::Map<Vector<Scalar>> vec() {
    return Eigen::Map<Vector<Scalar>>(data_.data(), data_.size());
  }

 private:
  Index offset(std::span<const Index> idx) const {
    if (static_cast<Index>(idx.size()) != shape_.order())
      throw std::invalid_argument("DenseTensor: index order mismatch");
    Index off = 0;
    for (Index k = 0; k < shape_.order(); ++k) {
      const Index ik = idx[static_cast<std::size_t>(k)];
      if (ik < 0 || ik >= shape_.dim(k))
        throw std::out_of_range("DenseTensor: index out of range");
      off += ik * shape_.stride(k);
    }
    return off;
  }

  Shape shape_;
  Vector<Scalar> data_;
};

template <class Scalar>
double frobenius_norm(const DenseTensor<Scalar>& x) {
  return x.vec().norm();
}

template <class Scalar>
double rel_error(const DenseTensor<Scalar>& reference, const DenseTensor<Scalar>& approx) {
  if (reference.shape() != approx.shape())
    throw std::invalid_argument("rel_error: shape mismatch");
  const double norm = frobenius_norm(reference);
  if (norm == 0.0)
    throw std::invalid_argument("rel_error: reference tensor has zero norm");
  return (reference.vec() - approx.vec()).norm() / norm;
}

/// Tensor-times-matrix along `mode`: contracts U (m x n_mode) with the
/// mode's fibers, replacing the extent n_mode by m. Equivalent to
/// unfolding, multiplying from the left, and refolding, but works on the
/// flat data directly via one GEMM per trailing block.
template <class Scalar, class Derived>
DenseTensor<Scalar> ttm(const DenseTensor<Scalar>& x,
                        const Eigen::MatrixBase<Derived>& u_expr, Index mode) {
  const auto& u = u_expr.derived();
  const Shape& shape = x.shape();
  const Index d = shape.order();
  if (mode < 0 || mode >= d) throw std::invalid_argument("ttm: mode out of range");
  const Index nk = shape.dim(mode);
  if (u.cols() != nk)
    throw std::invalid_argument("ttm: matrix has " + std::to_string(u.cols()) +
                                " columns, mode extent is " + std::to_string(nk));
  const Index m = u.rows();

  std::vector<Index> out_dims = shape.dims();
  out_dims[static_cast<std::size_t>(mode)] = m;
  DenseTensor<Scalar> out{Shape(std::move(out_dims))};

  using Map = Eigen::Map<Matrix<Scalar>>;
  using CMap = Eigen::Map<const Matrix<Scalar>>;
  const Index g = shape.stride(mode);
  const Index rest = shape.elements_excluding(mode);

  if (mode == 0) {
    Map(out.data(), m, rest).noalias() = u * CMap(x.data(), nk, rest);
  } else if (mode == d - 1) {
    Map(out.data(), g, m).noalias() = CMap(x.data(), g, nk) * u.transpose();
  } else {
    const Index blocks = rest / g;
    for (Index t = 0; t < blocks; ++t) {
      Map(out.data() + t * g * m, g, m).noalias() =
          CMap(x.data() + t * g * nk, g, nk) * u.transpose();
    }
  }
  return out;
}

/// Sequential TTM along several (distinct) modes, applied in list order.
/// The result is order-independent up to roundoff since modes commute.
template <class Scalar>
DenseTensor<Scalar> multi_ttm(const DenseTensor<Scalar>& x,
                              const std::vector<std::pair<Index, Matrix<Scalar>>>& factors) {
  std::vector<Index> seen;
  for (const auto& [mode, mat] : factors) {
    (void)mat;
    if (std::find(seen.begin(), seen.end(), mode) != seen.end())
      throw std::invalid_argument("multi_ttm: duplicate mode " + std::to_string(mode));
    seen.push_back(mode);
  }
  DenseTensor<Scalar> cur = x;
  for (const auto& [mode, mat] : factors) cur = ttm(cur, mat, mode);
  return cur;
}

}  // namespace srtt
