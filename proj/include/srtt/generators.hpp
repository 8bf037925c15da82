#pragma once

#include "srtt/htucker.hpp"

#include <functional>

namespace srtt {

// Synthetic low-rank inputs for the benchmark experiments, each returned
// together with its generating decomposition so exact-recovery tests know
// the ground truth.

enum class CoreKind {
  kUniform,    // i.i.d. core entries uniform in [0,1], factors from uniform matrices
  kSmoothGrid  // core sampled from a smooth function on a grid, Gaussian factors
};

/// Smooth multivariate stand-in used by the grid core: an inverse
/// multiquadric over [0,1]^d, bounded and infinitely differentiable.
inline double smooth_grid_function(std::span<const double> x) {
  double q = 0.0;
  for (double v : x) q += v * v;
  return 1.0 / (1.0 + q);
}

template <class Scalar>
struct PlantedTucker {
  DenseTensor<Scalar> tensor;
  TuckerDecomposition<Scalar> truth;
};

namespace detail {

template <class Scalar>
Matrix<Scalar> orthonormalized_random(Index rows, Index cols, bool gaussian, RngStream& rng) {
  Matrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = gaussian ? static_cast<Scalar>(rng.normal())
                         : static_cast<Scalar>(rng.uniform01());
  Eigen::HouseholderQR<Matrix<Scalar>> qr(m);
  Matrix<Scalar> q = Matrix<Scalar>::Identity(rows, cols);
  q = qr.householderQ() * q;
  return q;
}

}  // namespace detail

/// Planted Tucker tensor: random core (uniform entries or a smooth-grid
/// evaluation) and orthonormalized random factors, expanded densely.
template <class Scalar = double>
PlantedTucker<Scalar> make_planted_tucker(
    const Shape& shape, const Ranks& ranks, CoreKind core_kind, std::uint64_t seed,
    const std::function<double(std::span<const double>)>& grid_function = smooth_grid_function) {
  const Index d = shape.order();
  if (static_cast<Index>(ranks.size()) != d)
    throw std::invalid_argument("make_planted_tucker: rank vector order mismatch");
  for (Index k = 0; k < d; ++k)
    if (ranks[static_cast<std::size_t>(k)] < 1 || ranks[static_cast<std::size_t>(k)] > shape.dim(k))
      throw std::invalid_argument("make_planted_tucker: rank out of range in mode " +
                                  std::to_string(k));

  PlantedTucker<Scalar> out;
  Shape core_shape{ranks};
  out.truth.core = DenseTensor<Scalar>{core_shape};

  RngStream core_rng(seed, 0);
  if (core_kind == CoreKind::kUniform) {
    for (Index i = 0; i < out.truth.core.size(); ++i)
      out.truth.core[i] = static_cast<Scalar>(core_rng.uniform01());
  } else {
    std::vector<double> point(static_cast<std::size_t>(d));
    for (Index flat = 1; flat <= core_shape.num_elements(); ++flat) {
      const MultiIndex idx = tuple_index(flat, core_shape);
      for (Index k = 0; k < d; ++k) {
        const Index rk = ranks[static_cast<std::size_t>(k)];
        point[static_cast<std::size_t>(k)] =
            rk == 1 ? 0.0
                    : static_cast<double>(idx[static_cast<std::size_t>(k)] - 1) /
                          static_cast<double>(rk - 1);
      }
      out.truth.core[flat - 1] = static_cast<Scalar>(grid_function(point));
    }
  }

  const bool gaussian_factors = core_kind == CoreKind::kSmoothGrid;
  out.truth.factors.resize(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    RngStream rng(seed, static_cast<std::uint64_t>(k) + 1);
    out.truth.factors[static_cast<std::size_t>(k)] = detail::orthonormalized_random<Scalar>(
        shape.dim(k), ranks[static_cast<std::size_t>(k)], gaussian_factors, rng);
  }
  out.tensor = reconstruct(out.truth);
  return out;
}

template <class Scalar>
struct PlantedHTucker {
  DenseTensor<Scalar> tensor;
  HTuckerDecomposition<Scalar> truth;
};

/// Planted hierarchical Tucker tensor: leaf factors are Q factors of skinny
/// QRs of uniform random matrices, transfer tensors have i.i.d. uniform
/// entries, and the dense tensor is the exact expansion.
template <class Scalar = double>
PlantedHTucker<Scalar> make_planted_htucker(const Shape& shape, const DimensionTree& tree,
                                            const NodeRanks& ranks, std::uint64_t seed) {
  if (tree.order() != shape.order())
    throw std::invalid_argument("make_planted_htucker: tree and shape order mismatch");
  if (static_cast<Index>(ranks.size()) != tree.num_nodes())
    throw std::invalid_argument("make_planted_htucker: one rank per node required");
  if (ranks[0] != 1) throw std::invalid_argument("make_planted_htucker: root rank must be 1");

  PlantedHTucker<Scalar> out{DenseTensor<Scalar>{}, HTuckerDecomposition<Scalar>{tree, {}, {}}};
  out.truth.leaf_factors.resize(static_cast<std::size_t>(shape.order()));
  out.truth.transfers.resize(static_cast<std::size_t>(tree.num_nodes()));

  for (Index id : tree.leaves()) {
    const Index mode = tree.node(id).modes[0];
    RngStream rng(seed, static_cast<std::uint64_t>(id));
    out.truth.leaf_factors[static_cast<std::size_t>(mode)] =
        detail::orthonormalized_random<Scalar>(shape.dim(mode),
                                               ranks[static_cast<std::size_t>(id)],
                                               /*gaussian=*/false, rng);
  }
  for (Index id = 0; id < tree.num_nodes(); ++id) {
    const TreeNode& n = tree.node(id);
    if (n.is_leaf()) continue;
    RngStream rng(seed, static_cast<std::uint64_t>(id) + 1000003);
    DenseTensor<Scalar> b{Shape{ranks[static_cast<std::size_t>(id)],
                                ranks[static_cast<std::size_t>(n.left)],
                                ranks[static_cast<std::size_t>(n.right)]}};
    for (Index i = 0; i < b.size(); ++i) b[i] = static_cast<Scalar>(rng.uniform01());
    out.truth.transfers[static_cast<std::size_t>(id)] = std::move(b);
  }
  out.tensor = ht_reconstruct(out.truth);
  return out;
}

template <class Scalar>
struct PlantedSpectrum {
  DenseTensor<Scalar> tensor;
  Vector<Scalar> singular_values;  // per-mode unfolding spectrum, every mode alike

  /// Best multilinear rank-(r,..,r) approximation error; exact for this
  /// orthogonally decomposable construction (truncation is optimal).
  double best_error(Index rank) const {
    double tail2 = 0.0;
    for (Index i = rank; i < singular_values.size(); ++i)
      tail2 += static_cast<double>(singular_values(i) * singular_values(i));
    return std::sqrt(tail2);
  }
};

/// Orthogonally decomposable cubic tensor with a prescribed spectrum: a
/// superdiagonal core holding the given values and Gaussian-orthonormalized
/// factors. Every mode-k unfolding then has exactly these singular values,
/// which makes best-approximation errors computable in closed form.
template <class Scalar = double>
PlantedSpectrum<Scalar> make_planted_spectrum(Index order, Index n,
                                              const Vector<Scalar>& values, std::uint64_t seed) {
  if (values.size() > n)
    throw std::invalid_argument("make_planted_spectrum: more values than the mode size");
  TuckerDecomposition<Scalar> t;
  t.core = DenseTensor<Scalar>{Shape::uniform(order, values.size())};
  for (Index i = 0; i < values.size(); ++i) {
    MultiIndex idx(static_cast<std::size_t>(order), i + 1);
    t.core[linear_index(idx, t.core.shape()) - 1] = values(i);
  }
  t.factors.resize(static_cast<std::size_t>(order));
  for (Index k = 0; k < order; ++k) {
    RngStream rng(seed, static_cast<std::uint64_t>(k) + 1);
    t.factors[static_cast<std::size_t>(k)] =
        detail::orthonormalized_random<Scalar>(n, values.size(), /*gaussian=*/true, rng);
  }
  PlantedSpectrum<Scalar> out;
  out.tensor = reconstruct(t);
  Vector<Scalar> sorted = values;
  std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<Scalar>());
  out.singular_values = std::move(sorted);
  return out;
}

}  // namespace srtt
