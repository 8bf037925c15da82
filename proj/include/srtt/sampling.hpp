#pragma once

#include "srtt/common.hpp"
#include "srtt/rng.hpp"

#include <optional>
#include <unordered_set>
#include <vector>

namespace srtt {

/// s distinct indices drawn uniformly without replacement from [0, m),
/// in sampled order (Floyd's algorithm, O(s) expected).
inline std::vector<Index> sample_indices(Index m, Index s, RngStream& rng) {
  if (s < 1 || s > m)
    throw std::invalid_argument("sample_indices: need 1 <= s <= m, got s=" +
                                std::to_string(s) + " m=" + std::to_string(m));
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(s));
  std::unordered_set<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(s) * 2);
  for (Index j = m - s; j < m; ++j) {
    const Index t = static_cast<Index>(rng.bounded(static_cast<std::uint64_t>(j) + 1));
    if (chosen.insert(t).second) {
      out.push_back(t);
    } else {
      chosen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

/// Partitioned variant: [0, m) is split into `partitions` contiguous
/// subintervals, the first l-1 of length floor(m/l) and the last absorbing
/// m mod l; floor(s/l) indices are drawn from each of the first l-1 and
/// floor(s/l) + s mod l from the last. The per-subinterval draws use
/// independent child streams, so they may run concurrently and the result
/// is identical whichever order they execute in. This is an approximation
/// of a global uniform draw, not an exact equivalent.
inline std::vector<Index> sample_indices_partitioned(Index m, Index s, Index partitions,
                                                     RngStream& rng) {
  if (partitions < 1) throw std::invalid_argument("sample_indices_partitioned: partitions >= 1");
  if (partitions > s)
    throw std::invalid_argument("sample_indices_partitioned: partitions must not exceed s");
  if (s > m) throw std::invalid_argument("sample_indices_partitioned: s must not exceed m");
  if (partitions == 1) return sample_indices(m, s, rng);

  const Index base_len = m / partitions;
  if (base_len == 0)
    throw std::invalid_argument("sample_indices_partitioned: more partitions than indices");
  const Index base_cnt = s / partitions;

  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(s));
  for (Index part = 0; part < partitions; ++part) {
    const Index lo = part * base_len;
    const Index len = (part == partitions - 1) ? (m - lo) : base_len;
    const Index cnt = (part == partitions - 1) ? (base_cnt + s % partitions) : base_cnt;
    if (cnt > len)
      throw std::invalid_argument("sample_indices_partitioned: subinterval too small for draw");
    RngStream sub = rng.child(static_cast<std::uint64_t>(part));
    for (Index idx : sample_indices(len, cnt, sub)) out.push_back(lo + idx);
  }
  return out;
}

/// Matrix of i.i.d. standard normal entries, filled column-major.
template <class Scalar = double>
Matrix<Scalar> gaussian_matrix(Index rows, Index cols, RngStream& rng) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("gaussian_matrix: rows and cols must be >= 1");
  Matrix<Scalar> out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = static_cast<Scalar>(rng.normal());
  return out;
}

/// Per-target sketch sizing: either an explicit fiber count or a scaling
/// coefficient alpha with s = min(ceil(alpha * n_rows), available columns).
struct SketchConfig {
  std::optional<Index> samples;
  std::optional<double> alpha;
  Index oversampling = 4;
  std::uint64_t seed = 0;
  Index partitions = 1;

  Index resolve_samples(Index n_rows, Index available_cols) const {
    Index s;
    if (samples) {
      s = *samples;
    } else if (alpha) {
      s = static_cast<Index>(std::ceil(*alpha * static_cast<double>(n_rows)));
    } else {
      throw std::invalid_argument("SketchConfig: neither samples nor alpha is set");
    }
    return std::min(s, available_cols);
  }
};

}  // namespace srtt
