#pragma once

#include "srtt/parallel.hpp"
#include "srtt/sketch.hpp"
#include "srtt/unfolding.hpp"

#include <numeric>

namespace srtt {

template <class Scalar>
struct TuckerDecomposition {
  DenseTensor<Scalar> core;            // shape r_1 x ... x r_d
  std::vector<Matrix<Scalar>> factors;  // U_k of shape n_k x r_k, orthonormal columns
};

/// Expands a Tucker decomposition back to a dense tensor.
template <class Scalar>
DenseTensor<Scalar> reconstruct(const TuckerDecomposition<Scalar>& t) {
  DenseTensor<Scalar> out = t.core;
  for (Index k = 0; k < static_cast<Index>(t.factors.size()); ++k) {
    const auto& u = t.factors[static_cast<std::size_t>(k)];
    if (u.cols() != out.dim(k))
      throw std::invalid_argument("reconstruct: factor/core mismatch in mode " + std::to_string(k));
    out = ttm(out, u, k);
  }
  return out;
}

namespace detail {

inline void validate_ranks(const Shape& shape, const Ranks& r, const char* what) {
  if (static_cast<Index>(r.size()) != shape.order())
    throw std::invalid_argument(std::string(what) + ": rank vector order mismatch");
  for (Index k = 0; k < shape.order(); ++k) {
    const Index rk = r[static_cast<std::size_t>(k)];
    if (rk < 1 || rk > shape.dim(k))
      throw std::invalid_argument(std::string(what) + ": rank out of range in mode " +
                                  std::to_string(k));
  }
}

template <class Scalar>
DenseTensor<Scalar> core_from_factors(const DenseTensor<Scalar>& x,
                                      const std::vector<Matrix<Scalar>>& factors) {
  DenseTensor<Scalar> core = x;
  for (Index k = 0; k < static_cast<Index>(factors.size()); ++k)
    core = ttm(core, factors[static_cast<std::size_t>(k)].transpose(), k);
  return core;
}

}  // namespace detail

/// Truncated higher-order SVD: U_k from the leading left singular vectors
/// of each mode-k unfolding, core from the transposed multi-TTM.
/// Deterministic; materializes unfoldings (capped).
template <class Scalar>
TuckerDecomposition<Scalar> t_hosvd(const DenseTensor<Scalar>& x, const Ranks& target,
                                    std::int64_t cap_bytes = kDefaultUnfoldCapBytes) {
  detail::validate_ranks(x.shape(), target, "t_hosvd");
  TuckerDecomposition<Scalar> out;
  out.factors.resize(static_cast<std::size_t>(x.order()));
  for (Index k = 0; k < x.order(); ++k) {
    const Matrix<Scalar> mat = unfold(x, k, cap_bytes);
    out.factors[static_cast<std::size_t>(k)] =
        leading_left_singular_vectors<Scalar>(mat, target[static_cast<std::size_t>(k)]);
  }
  out.core = detail::core_from_factors(x, out.factors);
  return out;
}

/// Sequentially truncated HOSVD: after each factor is computed the working
/// tensor is reduced along that mode, so later unfoldings shrink. The final
/// working tensor is the core.
template <class Scalar>
TuckerDecomposition<Scalar> st_hosvd(const DenseTensor<Scalar>& x, const Ranks& target,
                                     std::vector<Index> mode_order = {},
                                     std::int64_t cap_bytes = kDefaultUnfoldCapBytes) {
  detail::validate_ranks(x.shape(), target, "st_hosvd");
  const Index d = x.order();
  if (mode_order.empty()) {
    mode_order.resize(static_cast<std::size_t>(d));
    std::iota(mode_order.begin(), mode_order.end(), Index{0});
  }
  std::vector<Index> sorted = mode_order;
  std::sort(sorted.begin(), sorted.end());
  for (Index k = 0; k < d; ++k)
    if (sorted[static_cast<std::size_t>(k)] != k)
      throw std::invalid_argument("st_hosvd: mode_order must be a permutation of the modes");

  TuckerDecomposition<Scalar> out;
  out.factors.resize(static_cast<std::size_t>(d));
  DenseTensor<Scalar> work = x;
  for (Index k : mode_order) {
    const Matrix<Scalar> mat = unfold(work, k, cap_bytes);
    Matrix<Scalar> u =
        leading_left_singular_vectors<Scalar>(mat, target[static_cast<std::size_t>(k)]);
    work = ttm(work, u.transpose(), k);
    out.factors[static_cast<std::size_t>(k)] = std::move(u);
  }
  out.core = std::move(work);
  return out;
}

/// Randomized HOSVD baseline: randomized SVD of each full unfolding
/// (the unfoldings are still materialized; only the SVD is sketched).
template <class Scalar>
TuckerDecomposition<Scalar> r_hosvd(const DenseTensor<Scalar>& x, const Ranks& target,
                                    Index oversampling, std::uint64_t seed,
                                    std::int64_t cap_bytes = kDefaultUnfoldCapBytes) {
  detail::validate_ranks(x.shape(), target, "r_hosvd");
  TuckerDecomposition<Scalar> out;
  out.factors.resize(static_cast<std::size_t>(x.order()));
  for (Index k = 0; k < x.order(); ++k) {
    const Index rk = target[static_cast<std::size_t>(k)];
    if (rk + oversampling > std::min(x.dim(k), x.shape().elements_excluding(k)))
      throw std::invalid_argument("r_hosvd: rank + oversampling too large in mode " +
                                  std::to_string(k));
    const Matrix<Scalar> mat = unfold(x, k, cap_bytes);
    RngStream rng(seed, static_cast<std::uint64_t>(k));
    out.factors[static_cast<std::size_t>(k)] =
        randomized_svd<Scalar>(mat, rk, oversampling, rng).u;
  }
  out.core = detail::core_from_factors(x, out.factors);
  return out;
}

/// Everything the subsampled methods report besides the decomposition.
struct SubsampleReport {
  std::vector<Index> sample_counts;     // s_k actually used per mode
  std::vector<Index> achieved_ranks;    // numerical rank revealed per mode
  std::vector<std::string> warnings;
  StageTimings timings;
};

namespace detail {

/// One mode of the subsampled randomized factor computation: sample fiber
/// columns, gather them, sketch, and orthonormalize. Randomness binds to
/// (seed, mode), never to the executing worker.
template <class Scalar>
RangeBasis<Scalar> subsampled_mode_basis(const DenseTensor<Scalar>& x, Index mode, Index rank,
                                         Index oversampling, Index samples, Index partitions,
                                         std::uint64_t seed, int worker, StageTimings& timings) {
  RngStream rng(seed, static_cast<std::uint64_t>(mode));
  const Index available = x.shape().elements_excluding(mode);

  double t0 = StageClock::now();
  std::vector<Index> cols = (partitions > 1)
                                ? sample_indices_partitioned(available, samples, partitions, rng)
                                : sample_indices(available, samples, rng);
  timings.add(stage::kSampling, worker, StageClock::now() - t0);

  t0 = StageClock::now();
  const Matrix<Scalar> y = extract_fibers(x, mode, cols);
  timings.add(stage::kExtract, worker, StageClock::now() - t0);

  t0 = StageClock::now();
  const Matrix<Scalar> omega = gaussian_matrix<Scalar>(y.cols(), rank + oversampling, rng);
  Matrix<Scalar> sketch(y.rows(), rank + oversampling);
  sketch.noalias() = y * omega;
  timings.add(stage::kSketch, worker, StageClock::now() - t0);

  t0 = StageClock::now();
  RangeBasis<Scalar> basis = range_basis_of_sketch<Scalar>(sketch, rank, rng);
  timings.add(stage::kSvd, worker, StageClock::now() - t0);
  return basis;
}

}  // namespace detail

/// Subsampled randomized HOSVD: per mode, s_k fibers are gathered (never an
/// unfolding), a Gaussian sketch reduces them to r_k basis vectors, and the
/// core is assembled from the only full-tensor pass. With an ExecPolicy the
/// per-mode factor jobs run concurrently and the core goes through the
/// sliced assembly; the numbers are identical for every worker count.
template <class Scalar>
TuckerDecomposition<Scalar> sub_r_hosvd(const DenseTensor<Scalar>& x, const Ranks& target,
                                        Index oversampling, const Ranks& samples,
                                        std::uint64_t seed,
                                        const std::optional<ExecPolicy>& exec = std::nullopt,
                                        SubsampleReport* report = nullptr) {
  const Shape& shape = x.shape();
  detail::validate_ranks(shape, target, "sub_r_hosvd");
  if (samples.size() != target.size())
    throw std::invalid_argument("sub_r_hosvd: samples vector order mismatch");
  const Index d = shape.order();
  for (Index k = 0; k < d; ++k) {
    const Index rk = target[static_cast<std::size_t>(k)];
    const Index sk = samples[static_cast<std::size_t>(k)];
    if (sk < rk + oversampling)
      throw std::invalid_argument("sub_r_hosvd: samples below rank + oversampling in mode " +
                                  std::to_string(k));
    if (sk > shape.elements_excluding(k))
      throw std::invalid_argument("sub_r_hosvd: more samples than fibers in mode " +
                                  std::to_string(k));
  }
  SubsampleReport local_report;
  SubsampleReport& rep = report ? *report : local_report;
  rep.sample_counts = samples;
  rep.achieved_ranks.assign(static_cast<std::size_t>(d), 0);
  if (oversampling < 4)
    rep.warnings.push_back("oversampling below the recommended minimum of 4");

  const ExecPolicy policy = exec.value_or(ExecPolicy{});
  const Index partitions = policy.index_partitions;

  std::vector<std::function<RangeBasis<Scalar>(int, StageTimings&)>> tasks;
  for (Index k = 0; k < d; ++k) {
    tasks.push_back([&, k](int worker, StageTimings& timings) {
      return detail::subsampled_mode_basis(x, k, target[static_cast<std::size_t>(k)],
                                           oversampling, samples[static_cast<std::size_t>(k)],
                                           partitions, seed, worker, timings);
    });
  }
  const double factor_t0 = StageClock::now();
  auto [bases, factor_timings] = parallel_factors<RangeBasis<Scalar>>(tasks, policy);
  rep.timings.merge(factor_timings);
  rep.timings.add(stage::kFactorWall, -1, StageClock::now() - factor_t0);

  TuckerDecomposition<Scalar> out;
  out.factors.resize(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    auto& basis = bases[static_cast<std::size_t>(k)];
    rep.achieved_ranks[static_cast<std::size_t>(k)] = basis.numerical_rank;
    if (basis.numerical_rank < target[static_cast<std::size_t>(k)])
      rep.warnings.push_back("mode " + std::to_string(k) + ": sketch revealed rank " +
                             std::to_string(basis.numerical_rank) + " < target " +
                             std::to_string(target[static_cast<std::size_t>(k)]) +
                             "; basis padded");
    out.factors[static_cast<std::size_t>(k)] = std::move(basis.q);
  }

  if (exec) {
    out.core = sliced_core(x, out.factors, policy, &rep.timings);
  } else {
    const double t0 = StageClock::now();
    out.core = detail::core_from_factors(x, out.factors);
    rep.timings.add(stage::kTtm, 0, StageClock::now() - t0);
  }
  return out;
}

/// Fraction of unfolding columns touched per mode, s_k / n_{/=k}.
inline std::vector<double> sampling_fractions(const Shape& shape, const Ranks& samples) {
  std::vector<double> out;
  for (Index k = 0; k < shape.order(); ++k)
    out.push_back(static_cast<double>(samples[static_cast<std::size_t>(k)]) /
                  static_cast<double>(shape.elements_excluding(k)));
  return out;
}

}  // namespace srtt
