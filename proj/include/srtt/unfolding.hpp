#pragma once

#include "srtt/tensor.hpp"

#include <span>

namespace srtt {

// Explicit unfoldings copy the whole tensor and exist as oracles and for
// the deterministic baselines; they refuse to materialize above a byte cap.
// The fiber gathers below are the production path: they copy only the
// requested columns and perform no arithmetic, so gathered values are
// bitwise equal to the corresponding unfolding entries.

inline constexpr std::int64_t kDefaultUnfoldCapBytes = std::int64_t{2} << 30;

namespace detail {

inline void check_unfold_cap(Index elements, std::int64_t cap_bytes, const char* what) {
  const std::int64_t bytes = static_cast<std::int64_t>(elements) * static_cast<std::int64_t>(sizeof(double));
  if (cap_bytes >= 0 && bytes > cap_bytes)
    throw ResourceError(std::string(what) + ": materialization of " + std::to_string(bytes) +
                        " bytes exceeds cap of " + std::to_string(cap_bytes));
}

}  // namespace detail

/// Columns `cols` (0-based, indexing the mode-k unfolding) gathered into an
/// n_k x |cols| matrix without forming the unfolding. Column j of the
/// unfolding is the fiber with base offset (j % g) + (j / g) * g * n_k and
/// stride g, where g is the mode stride.
template <class Scalar>
Matrix<Scalar> extract_fibers(const DenseTensor<Scalar>& x, Index mode,
                              std::span<const Index> cols) {
  const Shape& shape = x.shape();
  if (mode < 0 || mode >= shape.order())
    throw std::invalid_argument("extract_fibers: mode out of range");
  const Index nk = shape.dim(mode);
  const Index g = shape.stride(mode);
  const Index ncols_total = shape.elements_excluding(mode);

  Matrix<Scalar> out(nk, static_cast<Index>(cols.size()));
  using StridedVec = Eigen::Map<const Vector<Scalar>, 0, Eigen::InnerStride<>>;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const Index c = cols[j];
    if (c < 0 || c >= ncols_total)
      throw std::out_of_range("extract_fibers: column index out of range");
    const Index base = (c % g) + (c / g) * g * nk;
    out.col(static_cast<Index>(j)) = StridedVec(x.data() + base, nk, Eigen::InnerStride<>(g));
  }
  return out;
}

/// Group-mode fiber gather: column `c` (0-based over the modes outside S,
/// ascending, first fastest) of the mode-set unfolding, rows ordered by the
/// linear index map over S's modes ascending.
template <class Scalar>
Matrix<Scalar> extract_group_fibers(const DenseTensor<Scalar>& x, const ModeSet& set,
                                    std::span<const Index> cols) {
  const Shape& shape = x.shape();
  const Index d = shape.order();
  set.validate_for_order(d);
  if (set.size() >= d)
    throw std::invalid_argument("extract_group_fibers: mode set must be a proper subset");

  const std::vector<Index> comp = set.complement(d);

  Index nrows = 1;
  for (Index m : set) nrows *= shape.dim(m);
  Index ncols_total = 1;
  for (Index m : comp) ncols_total *= shape.dim(m);

  // Row odometer over S's modes: strides in the flat data and reset jumps.
  const Index nset = set.size();
  std::vector<Index> row_stride(static_cast<std::size_t>(nset));
  std::vector<Index> row_dim(static_cast<std::size_t>(nset));
  for (Index i = 0; i < nset; ++i) {
    row_stride[static_cast<std::size_t>(i)] = shape.stride(set[i]);
    row_dim[static_cast<std::size_t>(i)] = shape.dim(set[i]);
  }

  Matrix<Scalar> out(nrows, static_cast<Index>(cols.size()));
  std::vector<Index> digits(static_cast<std::size_t>(nset));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    Index c = cols[j];
    if (c < 0 || c >= ncols_total)
      throw std::out_of_range("extract_group_fibers: column index out of range");
    // Decode the column into the complement modes (ascending, first fastest).
    Index base = 0;
    for (Index m : comp) {
      base += (c % shape.dim(m)) * shape.stride(m);
      c /= shape.dim(m);
    }
    std::fill(digits.begin(), digits.end(), Index{0});
    Index off = base;
    Scalar* colptr = out.col(static_cast<Index>(j)).data();
    for (Index r = 0; r < nrows; ++r) {
      colptr[r] = x.data()[off];
      for (Index t = 0; t < nset; ++t) {
        auto tt = static_cast<std::size_t>(t);
        if (++digits[tt] < row_dim[tt]) {
          off += row_stride[tt];
          break;
        }
        digits[tt] = 0;
        off -= row_stride[tt] * (row_dim[tt] - 1);
      }
    }
  }
  return out;
}

/// Mode-k unfolding, n_k x n_{/=k}. Oracle/baseline path; capped.
template <class Scalar>
Matrix<Scalar> unfold(const DenseTensor<Scalar>& x, Index mode,
                      std::int64_t cap_bytes = kDefaultUnfoldCapBytes) {
  detail::check_unfold_cap(x.size(), cap_bytes, "unfold");
  const Index ncols = x.shape().elements_excluding(mode);
  std::vector<Index> cols(static_cast<std::size_t>(ncols));
  std::iota(cols.begin(), cols.end(), Index{0});
  return extract_fibers(x, mode, cols);
}

/// Mode-set unfolding, n_S x n_{not in S}. Oracle/baseline path; capped.
template <class Scalar>
Matrix<Scalar> unfold_set(const DenseTensor<Scalar>& x, const ModeSet& set,
                          std::int64_t cap_bytes = kDefaultUnfoldCapBytes) {
  detail::check_unfold_cap(x.size(), cap_bytes, "unfold_set");
  const Index d = x.order();
  set.validate_for_order(d);
  if (set.size() >= d)
    throw std::invalid_argument("unfold_set: mode set must be a proper subset");
  Index ncols = 1;
  for (Index m : set.complement(d)) ncols *= x.dim(m);
  std::vector<Index> cols(static_cast<std::size_t>(ncols));
  std::iota(cols.begin(), cols.end(), Index{0});
  return extract_group_fibers(x, set, cols);
}

/// True when S is a contiguous run of leading modes {0..|S|-1}; the mode-set
/// unfolding is then a plain column-major reshape of the flat data.
inline bool is_leading_block(const ModeSet& set) {
  for (Index i = 0; i < set.size(); ++i)
    if (set[i] != i) return false;
  return true;
}

}  // namespace srtt
