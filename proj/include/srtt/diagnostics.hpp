#pragma once

#include "srtt/sketch.hpp"
#include "srtt/unfolding.hpp"

#include <span>

namespace srtt {

// Instruments for the error theory of the subsampled methods: coherence,
// the singular-value events that make uniform fiber sampling work, the
// expected-error bound evaluators, and Monte-Carlo checks of the Gaussian
// moment inequality behind them. All bound evaluators are deterministic
// pure functions of their inputs.

/// Coherence of the subspace spanned by an orthonormal V: the largest
/// squared row norm, in (0, 1]. Near 1 means the subspace concentrates on
/// few coordinates and uniform sampling will miss it.
inline double coherence(const Eigen::Ref<const Matrix<double>>& v) {
  if (orthonormality_defect<double>(v) > 1e-10)
    throw std::invalid_argument("coherence: input columns are not orthonormal");
  return v.rowwise().squaredNorm().maxCoeff();
}

/// Free parameters of the sampled-sketch error bounds.
struct BoundParameters {
  double delta = 0.0;   // singular-value drop tolerance, in [0, 1)
  double eta = 0.0;     // singular-value growth tolerance, >= 0
  double alpha1 = 0.0;  // sample-size multipliers s >= alpha_i * M_i * log(...)
  double alpha2 = 0.0;
  double m1 = 0.0;      // m * coherence(V_1)
  double m2 = 0.0;      // m * coherence(V_2)
  Index r = 1;          // target rank
  Index p = 4;          // oversampling
  Index s = 0;          // sample count
  Index m = 0;          // number of columns available
  Index n = 0;          // number of rows
};

/// Closed-form failure probability of the two sampling events:
/// r * (e^-delta / (1-delta)^(1-delta))^(s/M1)
///   + (n-r) * (e^eta / (1+eta)^(1+eta))^(s/M2).
inline double sampling_event_failure_bound(const BoundParameters& q) {
  if (q.delta < 0.0 || q.delta >= 1.0)
    throw std::invalid_argument("sampling_event_failure_bound: delta must be in [0,1)");
  if (q.eta < 0.0) throw std::invalid_argument("sampling_event_failure_bound: eta must be >= 0");
  const double s = static_cast<double>(q.s);
  const double base1 = std::exp(-q.delta) / std::pow(1.0 - q.delta, 1.0 - q.delta);
  const double base2 = std::exp(q.eta) / std::pow(1.0 + q.eta, 1.0 + q.eta);
  const double term1 = q.m1 > 0.0 ? static_cast<double>(q.r) * std::pow(base1, s / q.m1) : 0.0;
  const double term2 =
      q.m2 > 0.0 ? static_cast<double>(q.n - q.r) * std::pow(base2, s / q.m2) : 0.0;
  return term1 + term2;
}

/// Expected-error bound for one sampled-then-sketched range basis:
/// (1 + 3^(3/2) r (1+eta)(r+p) / ((1-delta)(p+1)))^(1/2) * tail,
/// where tail bounds the energy beyond rank r.
inline double sampled_range_error_bound(const BoundParameters& q, double tail) {
  if (q.delta < 0.0 || q.delta >= 1.0)
    throw std::invalid_argument("sampled_range_error_bound: delta must be in [0,1)");
  if (q.eta < 0.0) throw std::invalid_argument("sampled_range_error_bound: eta must be >= 0");
  const double r = static_cast<double>(q.r);
  const double p = static_cast<double>(q.p);
  const double term =
      std::pow(3.0, 1.5) * r * (1.0 + q.eta) * (r + p) / ((1.0 - q.delta) * (p + 1.0));
  return std::sqrt(1.0 + term) * tail;
}

/// Multi-mode version: (d + sum_k 3^(3/2) r_k (1+eta_k)(r_k+p) /
/// ((1-delta_k)(p+1)))^(1/2) * best_error. The true best-approximation
/// error is not computable in general; callers usually substitute the
/// per-mode tail aggregate, which upper-bounds it.
inline double sampled_hosvd_error_bound(std::span<const BoundParameters> per_mode,
                                        double best_error) {
  double sum = static_cast<double>(per_mode.size());
  for (const BoundParameters& q : per_mode) {
    if (q.delta < 0.0 || q.delta >= 1.0)
      throw std::invalid_argument("sampled_hosvd_error_bound: delta must be in [0,1)");
    const double r = static_cast<double>(q.r);
    const double p = static_cast<double>(q.p);
    sum += std::pow(3.0, 1.5) * r * (1.0 + q.eta) * (r + p) / ((1.0 - q.delta) * (p + 1.0));
  }
  return std::sqrt(sum) * best_error;
}

/// Expected-error factor of the randomized HOSVD baseline,
/// (d + sum_k r_k / (p-1))^(1/2).
inline double rhosvd_error_bound(const Ranks& ranks, Index p) {
  if (p < 2) throw std::invalid_argument("rhosvd_error_bound: need p >= 2");
  double sum = static_cast<double>(ranks.size());
  for (Index r : ranks) sum += static_cast<double>(r) / static_cast<double>(p - 1);
  return std::sqrt(sum);
}

/// Grid-searched (delta, eta) minimizing the failure bound for the given
/// sampling geometry: delta over {0.1,...,0.9}, eta log-spaced over
/// [0.1, m/s - 1] (20 points).
inline std::pair<double, double> suggest_event_parameters(BoundParameters q) {
  const double eta_max = static_cast<double>(q.m) / static_cast<double>(q.s) - 1.0;
  double best_delta = 0.1, best_eta = std::min(0.1, eta_max);
  double best = std::numeric_limits<double>::infinity();
  for (int di = 1; di <= 9; ++di) {
    for (int ei = 0; ei < 20; ++ei) {
      const double eta =
          eta_max <= 0.1
              ? eta_max
              : std::exp(std::log(0.1) + (std::log(eta_max) - std::log(0.1)) * ei / 19.0);
      q.delta = 0.1 * di;
      q.eta = eta;
      const double bound = sampling_event_failure_bound(q);
      if (bound < best) {
        best = bound;
        best_delta = q.delta;
        best_eta = q.eta;
      }
      if (eta_max <= 0.1) break;
    }
  }
  return {best_delta, best_eta};
}

struct SamplingEventResult {
  double freq_lower_fail = 0.0;  // sigma_r(V1^T E) fell below its floor
  double freq_upper_fail = 0.0;  // sigma_1(V2^T E) rose above its ceiling
  double freq_any_fail = 0.0;
  double failure_bound = 1.0;    // closed-form upper bound on any-failure
  BoundParameters params;
  Index trials = 0;
  bool pass = false;
};

/// Empirical check of the two sampling events. For `trials` uniform draws
/// of s columns, measures how often sigma_r of the sampled top right
/// singular block drops below sqrt((1-delta)s/m) or sigma_1 of the sampled
/// tail block exceeds sqrt((1+eta)s/m), and compares the any-failure
/// frequency against the closed-form bound. A small comparison slack keeps
/// the full-sampling boundary case (where equality holds exactly) from
/// failing by roundoff.
inline SamplingEventResult sampling_event_check(const Eigen::Ref<const Matrix<double>>& x,
                                                Index r, Index s, Index trials, double delta,
                                                double eta, RngStream& rng) {
  const Index n = x.rows(), m = x.cols();
  if (n > m) throw std::invalid_argument("sampling_event_check: expected a fat matrix (n <= m)");
  if (r < 1 || r > n) throw std::invalid_argument("sampling_event_check: rank out of range");
  if (s < 1 || s > m) throw std::invalid_argument("sampling_event_check: s out of range");

  Eigen::BDCSVD<Matrix<double>> svd(x, Eigen::ComputeThinV);
  const Matrix<double> v1 = svd.matrixV().leftCols(r);
  const Matrix<double> v2 = svd.matrixV().rightCols(n - r);

  SamplingEventResult out;
  out.params.delta = delta;
  out.params.eta = eta;
  out.params.r = r;
  out.params.s = s;
  out.params.m = m;
  out.params.n = n;
  out.params.m1 = static_cast<double>(m) * coherence(v1);
  out.params.m2 = v2.cols() > 0 ? static_cast<double>(m) * coherence(v2) : 0.0;
  out.params.alpha1 = out.params.m1 > 0.0
                          ? static_cast<double>(s) / (out.params.m1 * std::max(std::log(static_cast<double>(r)), 1e-300))
                          : 0.0;
  out.params.alpha2 =
      (out.params.m2 > 0.0 && n - r > 0)
          ? static_cast<double>(s) /
                (out.params.m2 * std::max(std::log(static_cast<double>(n - r)), 1e-300))
          : 0.0;
  out.failure_bound = sampling_event_failure_bound(out.params);
  out.trials = trials;

  const double ratio = static_cast<double>(s) / static_cast<double>(m);
  const double lower = std::sqrt((1.0 - delta) * ratio);
  const double upper = std::sqrt((1.0 + eta) * ratio);
  const double slack = 1e-12;

  Index lower_fail = 0, upper_fail = 0, any_fail = 0;
  for (Index t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.child(static_cast<std::uint64_t>(t));
    const std::vector<Index> picked = sample_indices(m, s, trial_rng);
    Matrix<double> v1e(r, s), v2e(n - r, s);
    for (Index j = 0; j < s; ++j) {
      v1e.col(j) = v1.row(picked[static_cast<std::size_t>(j)]).transpose();
      if (n - r > 0) v2e.col(j) = v2.row(picked[static_cast<std::size_t>(j)]).transpose();
    }
    Eigen::BDCSVD<Matrix<double>> s1(v1e);
    const bool low_bad = s1.singularValues()(r - 1) < lower - slack;
    bool up_bad = false;
    if (n - r > 0) {
      Eigen::BDCSVD<Matrix<double>> s2(v2e);
      up_bad = s2.singularValues()(0) > upper + slack;
    }
    lower_fail += low_bad;
    upper_fail += up_bad;
    any_fail += (low_bad || up_bad);
  }
  out.freq_lower_fail = static_cast<double>(lower_fail) / static_cast<double>(trials);
  out.freq_upper_fail = static_cast<double>(upper_fail) / static_cast<double>(trials);
  out.freq_any_fail = static_cast<double>(any_fail) / static_cast<double>(trials);

  const double capped = std::min(1.0, out.failure_bound);
  const double se = std::sqrt(std::max(capped * (1.0 - capped), 1e-12) /
                              static_cast<double>(trials));
  out.pass = out.freq_any_fail <= capped + 3.0 * se + 1.0 / static_cast<double>(trials);
  return out;
}

struct FourthMomentResult {
  double estimate = 0.0;   // (mean of ||S G T||_F^4)^(1/4)
  double bound = 0.0;      // 3^(1/4) ||S||_F ||T||_F
  double std_error = 0.0;  // delta-method standard error of the estimate
  Index trials = 0;
  bool pass = false;
};

/// Monte-Carlo check of E[||S G T||_F^4]^(1/4) <= 3^(1/4) ||S||_F ||T||_F
/// for standard Gaussian G; passes when the estimate stays within three
/// standard errors of the bound.
inline FourthMomentResult gaussian_fourth_moment_check(
    const Eigen::Ref<const Matrix<double>>& s_mat, const Eigen::Ref<const Matrix<double>>& t_mat,
    Index trials, RngStream& rng) {
  if (s_mat.cols() < 1 || t_mat.rows() < 1)
    throw std::invalid_argument("gaussian_fourth_moment_check: empty factor");
  FourthMomentResult out;
  out.trials = trials;
  out.bound = std::pow(3.0, 0.25) * s_mat.norm() * t_mat.norm();

  double sum = 0.0, sum_sq = 0.0;
  for (Index t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.child(static_cast<std::uint64_t>(t));
    const Matrix<double> g = gaussian_matrix(s_mat.cols(), t_mat.rows(), trial_rng);
    const double norm2 = (s_mat * g * t_mat).squaredNorm();
    const double x4 = norm2 * norm2;
    sum += x4;
    sum_sq += x4 * x4;
  }
  const double nt = static_cast<double>(trials);
  const double mean = sum / nt;
  if (mean == 0.0) {
    out.pass = true;  // degenerate factor: the bound holds with equality at 0
    return out;
  }
  const double var = std::max(0.0, sum_sq / nt - mean * mean) / std::max(1.0, nt - 1.0) * nt;
  const double se_mean = std::sqrt(var / nt);
  out.estimate = std::pow(mean, 0.25);
  // d/dx x^(1/4) = x^(-3/4)/4.
  out.std_error = se_mean * std::pow(mean, -0.75) / 4.0;
  out.pass = out.estimate <= out.bound + 3.0 * out.std_error;
  return out;
}

struct TailSpectrum {
  std::vector<Vector<double>> per_mode;  // singular values beyond the target rank
  double aggregate = 0.0;                // sqrt(sum over modes of squared tails)
};

/// Per-mode tail energies from full SVDs of the unfoldings (oracle path,
/// capped); the aggregate upper-bounds the best approximation error at the
/// given multilinear rank.
template <class Scalar>
TailSpectrum tail_energy(const DenseTensor<Scalar>& x, const Ranks& ranks,
                         std::int64_t cap_bytes = kDefaultUnfoldCapBytes) {
  const Index d = x.order();
  if (static_cast<Index>(ranks.size()) != d)
    throw std::invalid_argument("tail_energy: rank vector order mismatch");
  TailSpectrum out;
  double total = 0.0;
  for (Index k = 0; k < d; ++k) {
    const Matrix<Scalar> mat = unfold(x, k, cap_bytes);
    Eigen::BDCSVD<Matrix<Scalar>> svd(mat);
    const auto& sv = svd.singularValues();
    const Index rk = std::min<Index>(ranks[static_cast<std::size_t>(k)], sv.size());
    Vector<double> tail = sv.tail(sv.size() - rk).template cast<double>();
    total += tail.squaredNorm();
    out.per_mode.push_back(std::move(tail));
  }
  out.aggregate = std::sqrt(total);
  return out;
}

inline double tail_aggregate(std::span<const double> per_mode_tails) {
  double total = 0.0;
  for (double t : per_mode_tails) total += t * t;
  return std::sqrt(total);
}

}  // namespace srtt
