#pragma once

#include "srtt/sampling.hpp"

#include <Eigen/Dense>

namespace srtt {

template <class Scalar>
struct SvdResult {
  Matrix<Scalar> u;
  Vector<Scalar> singular_values;
  Matrix<Scalar> v;
};

/// Leading-t SVD factors of a dense matrix (thin BDC SVD, truncated).
template <class Scalar>
SvdResult<Scalar> truncated_svd(const Eigen::Ref<const Matrix<Scalar>>& a, Index t) {
  if (t < 1 || t > std::min(a.rows(), a.cols()))
    throw std::invalid_argument("truncated_svd: rank out of range");
  Eigen::BDCSVD<Matrix<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult<Scalar> out;
  out.u = svd.matrixU().leftCols(t);
  out.singular_values = svd.singularValues().head(t);
  out.v = svd.matrixV().leftCols(t);
  return out;
}

/// Leading-t left singular vectors only (no V), for factor computations.
template <class Scalar>
Matrix<Scalar> leading_left_singular_vectors(const Eigen::Ref<const Matrix<Scalar>>& a, Index t) {
  if (t < 1 || t > std::min(a.rows(), a.cols()))
    throw std::invalid_argument("leading_left_singular_vectors: rank out of range");
  Eigen::BDCSVD<Matrix<Scalar>> svd(a, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(t);
}

template <class Scalar>
struct RangeBasis {
  Matrix<Scalar> q;            // exactly the requested number of columns
  Index numerical_rank = 0;    // rank revealed by the sketch; < cols(q) means padding
};

namespace detail {

// Orthonormalize fresh Gaussian columns against q's first `filled` columns
// and append them; completes a rank-deficient basis.
template <class Scalar>
void pad_basis(Matrix<Scalar>& q, Index filled, RngStream& rng) {
  const Index n = q.rows();
  for (Index j = filled; j < q.cols(); ++j) {
    Vector<Scalar> v(n);
    for (;;) {
      for (Index i = 0; i < n; ++i) v(i) = static_cast<Scalar>(rng.normal());
      // Two rounds of Gram-Schmidt against the accepted columns.
      for (int round = 0; round < 2; ++round)
        if (j > 0) v -= q.leftCols(j) * (q.leftCols(j).transpose() * v);
      const Scalar norm = v.norm();
      if (norm > Scalar(1e-8)) {
        q.col(j) = v / norm;
        break;
      }
    }
  }
}

}  // namespace detail

/// Basis extraction from an already-formed sketch y*omega: keeps the `rank`
/// leading left singular vectors (spectrally sorted, unlike a plain QR of
/// the sketch). If the sketch reveals numerical rank below the target, the
/// basis is completed with orthonormalized Gaussian columns and the
/// achieved rank is reported in the result.
template <class Scalar>
RangeBasis<Scalar> range_basis_of_sketch(const Eigen::Ref<const Matrix<Scalar>>& sketch,
                                         Index rank, RngStream& rng) {
  if (rank < 1 || rank > sketch.cols())
    throw std::invalid_argument("range_basis_of_sketch: rank out of range");
  Eigen::BDCSVD<Matrix<Scalar>> svd(sketch, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const Scalar tol =
      std::max(sketch.rows(), sketch.cols()) * std::numeric_limits<Scalar>::epsilon() * sv(0);
  Index nrank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++nrank;

  RangeBasis<Scalar> out;
  out.numerical_rank = std::min(nrank, rank);
  out.q.resize(sketch.rows(), rank);
  out.q.leftCols(out.numerical_rank) = svd.matrixU().leftCols(out.numerical_rank);
  if (out.numerical_rank < rank) detail::pad_basis(out.q, out.numerical_rank, rng);
  return out;
}

/// Orthonormal basis with `rank` columns approximating Range(y): draws a
/// Gaussian sketch omega (cols(y) x (rank+oversampling)), forms y*omega and
/// extracts the basis as above.
template <class Scalar>
RangeBasis<Scalar> range_finder(const Eigen::Ref<const Matrix<Scalar>>& y, Index rank,
                                Index oversampling, RngStream& rng) {
  if (rank < 1) throw std::invalid_argument("range_finder: rank must be >= 1");
  if (oversampling < 0) throw std::invalid_argument("range_finder: oversampling must be >= 0");
  if (rank + oversampling > std::min(y.rows(), y.cols()))
    throw std::invalid_argument("range_finder: rank + oversampling exceeds min(rows, cols)");

  const Matrix<Scalar> omega = gaussian_matrix<Scalar>(y.cols(), rank + oversampling, rng);
  Matrix<Scalar> sketch(y.rows(), rank + oversampling);
  sketch.noalias() = y * omega;
  return range_basis_of_sketch<Scalar>(sketch, rank, rng);
}

/// Plain QR range basis of a Gaussian sketch with rank+oversampling
/// columns, without truncation. This is the object the expected-error bound
/// below is stated for.
template <class Scalar>
Matrix<Scalar> sketched_qr_basis(const Eigen::Ref<const Matrix<Scalar>>& a, Index width,
                                 RngStream& rng) {
  if (width < 1 || width > std::min(a.rows(), a.cols()))
    throw std::invalid_argument("sketched_qr_basis: width out of range");
  const Matrix<Scalar> omega = gaussian_matrix<Scalar>(a.cols(), width, rng);
  Matrix<Scalar> sketch(a.rows(), width);
  sketch.noalias() = a * omega;
  Eigen::HouseholderQR<Matrix<Scalar>> qr(sketch);
  Matrix<Scalar> q = Matrix<Scalar>::Identity(a.rows(), width);
  q = qr.householderQ() * q;
  return q;
}

/// Expected Frobenius residual bound for the Gaussian range finder at
/// target rank k with oversampling p: (1 + k/(p-1))^(1/2) * tail, where
/// tail = sqrt(sum of squared singular values beyond k).
inline double rangefinder_error_bound(Index k, Index p, double tail) {
  if (p < 2) throw std::invalid_argument("rangefinder_error_bound: need p >= 2");
  return std::sqrt(1.0 + static_cast<double>(k) / static_cast<double>(p - 1)) * tail;
}

/// Randomized SVD: range basis Q of a from the range finder, then the exact
/// SVD of Q^T a, with U = Q * (small left factor), truncated to `rank`.
template <class Scalar>
SvdResult<Scalar> randomized_svd(const Eigen::Ref<const Matrix<Scalar>>& a, Index rank,
                                 Index oversampling, RngStream& rng) {
  if (a.isZero(Scalar(0))) {
    SvdResult<Scalar> out;
    out.u = Matrix<Scalar>::Identity(a.rows(), rank);
    out.singular_values = Vector<Scalar>::Zero(rank);
    out.v = Matrix<Scalar>::Identity(a.cols(), rank);
    return out;
  }
  RangeBasis<Scalar> basis = range_finder<Scalar>(a, rank, oversampling, rng);
  Matrix<Scalar> small(basis.q.cols(), a.cols());
  small.noalias() = basis.q.transpose() * a;
  Eigen::BDCSVD<Matrix<Scalar>> svd(small, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult<Scalar> out;
  out.u.noalias() = basis.q * svd.matrixU().leftCols(rank);
  out.singular_values = svd.singularValues().head(rank);
  out.v = svd.matrixV().leftCols(rank);
  return out;
}

/// Max-abs deviation of Q^T Q from the identity; orthonormality metric used
/// across the test suites.
template <class Scalar>
Scalar orthonormality_defect(const Eigen::Ref<const Matrix<Scalar>>& q) {
  Matrix<Scalar> gram = q.transpose() * q;
  gram -= Matrix<Scalar>::Identity(q.cols(), q.cols());
  return gram.cwiseAbs().maxCoeff();
}

}  // namespace srtt
