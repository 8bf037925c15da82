#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "srtt/sketch.hpp"

#include <algorithm>

using namespace srtt;

namespace {

// Orthonormal columns via Householder QR of a random Gaussian matrix.
Matrix<double> random_orthonormal(Index rows, Index cols, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const Matrix<double> g = gaussian_matrix(rows, cols, rng);
  Eigen::HouseholderQR<Matrix<double>> qr(g);
  Matrix<double> q = Matrix<double>::Identity(rows, cols);
  q = qr.householderQ() * q;
  return q;
}

// Matrix with prescribed singular values.
Matrix<double> planted_spectrum_matrix(Index rows, Index cols, const Vector<double>& sv,
                                       std::uint64_t seed) {
  const Matrix<double> u = random_orthonormal(rows, sv.size(), seed);
  const Matrix<double> v = random_orthonormal(cols, sv.size(), seed + 1);
  return u * sv.asDiagonal() * v.transpose();
}

}  // namespace

TEST_CASE("truncated svd on a diagonal matrix picks the leading values") {
  Matrix<double> a = Matrix<double>::Zero(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 2.0;
  a(2, 2) = 1.0;
  const auto svd = truncated_svd<double>(a, 2);
  CHECK(svd.singular_values(0) == doctest::Approx(3.0));
  CHECK(svd.singular_values(1) == doctest::Approx(2.0));
  CHECK(orthonormality_defect<double>(svd.u) <= 1e-12);

  const Matrix<double> eye = Matrix<double>::Identity(4, 4);
  const auto full = truncated_svd<double>(eye, 4);
  CHECK(orthonormality_defect<double>(full.u) <= 1e-12);

  CHECK_THROWS_AS(truncated_svd<double>(a, 4), std::invalid_argument);
}

TEST_CASE("truncated svd residual equals the tail energy") {
  const Matrix<double> a = testing::random_matrix(20, 50, 101);
  const Index t = 5;
  const auto svd = truncated_svd<double>(a, t);
  const Matrix<double> approx = svd.u * svd.singular_values.asDiagonal() * svd.v.transpose();

  Eigen::BDCSVD<Matrix<double>> full(a);
  double tail2 = 0.0;
  for (Index i = t; i < full.singularValues().size(); ++i)
    tail2 += full.singularValues()(i) * full.singularValues()(i);

  CHECK((a - approx).squaredNorm() == doctest::Approx(tail2).epsilon(1e-10));
}

TEST_CASE("range finder captures an orthonormal input exactly") {
  const Matrix<double> y = random_orthonormal(30, 5, 7);
  RngStream rng(19, 0);
  const auto basis = range_finder<double>(y, 5, 0, rng);
  CHECK(basis.numerical_rank == 5);
  CHECK(orthonormality_defect<double>(basis.q) <= 1e-12);
  const Matrix<double> resid = y - basis.q * (basis.q.transpose() * y);
  CHECK(resid.norm() <= 1e-10 * y.norm());
}

TEST_CASE("range finder captures an exact low-rank product") {
  const Matrix<double> a = testing::random_matrix(40, 6, 201);
  const Matrix<double> b = testing::random_matrix(25, 6, 202);
  const Matrix<double> y = a * b.transpose();
  RngStream rng(20, 0);
  const auto basis = range_finder<double>(y, 6, 4, rng);
  const Matrix<double> resid = y - basis.q * (basis.q.transpose() * y);
  CHECK(resid.norm() <= 1e-10 * y.norm());
}

TEST_CASE("range finder on a tiny-second-singular-value matrix") {
  // Singular values (1, 1e-8): the residual is of the order of the small
  // value times an O(1) Gaussian ratio, so it is seed-pinned to a typical
  // draw and additionally checked at a loose always-valid level.
  Matrix<double> y = Matrix<double>::Zero(2, 2);
  y(0, 0) = 1.0;
  y(1, 1) = 1e-8;
  RngStream rng(4, 0);
  const auto basis = range_finder<double>(y, 1, 1, rng);
  const Matrix<double> resid = y - basis.q * (basis.q.transpose() * y);
  CHECK(resid.norm() <= 2e-8);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream loose(seed, 0);
    const auto b = range_finder<double>(y, 1, 1, loose);
    CHECK((y - b.q * (b.q.transpose() * y)).norm() <= 1e-6);
  }
}

TEST_CASE("range finder pads and reports a rank-deficient sketch") {
  Matrix<double> y = Matrix<double>::Zero(10, 6);
  y.col(0).setOnes();  // rank 1
  RngStream rng(22, 0);
  const auto basis = range_finder<double>(y, 3, 2, rng);
  CHECK(basis.numerical_rank == 1);
  CHECK(basis.q.cols() == 3);
  CHECK(orthonormality_defect<double>(basis.q) <= 1e-12);

  CHECK_THROWS_AS(range_finder<double>(y, 6, 5, rng), std::invalid_argument);
}

TEST_CASE("randomized svd reconstructs exact-rank matrices") {
  const Matrix<double> a = testing::random_matrix(30, 4, 301);
  const Matrix<double> b = testing::random_matrix(50, 4, 302);
  const Matrix<double> m = a * b.transpose();
  RngStream rng(23, 0);
  const auto svd = randomized_svd<double>(m, 4, 4, rng);
  const Matrix<double> approx = svd.u * svd.singular_values.asDiagonal() * svd.v.transpose();
  CHECK((m - approx).norm() <= 1e-9 * m.norm());
  CHECK(orthonormality_defect<double>(svd.u) <= 1e-12);
}

TEST_CASE("randomized svd of the zero matrix has zero singular values") {
  const Matrix<double> zero = Matrix<double>::Zero(8, 12);
  RngStream rng(24, 0);
  const auto svd = randomized_svd<double>(zero, 3, 2, rng);
  CHECK(svd.singular_values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("randomized svd tracks the truncated svd across a spectral gap") {
  // Singular values with a factor-1000 gap after index 5.
  Vector<double> sv(10);
  for (Index i = 0; i < 5; ++i) sv(i) = 10.0 - static_cast<double>(i);
  for (Index i = 5; i < 10; ++i) sv(i) = 5e-3 / static_cast<double>(i);
  const Matrix<double> a = planted_spectrum_matrix(40, 60, sv, 401);

  const auto det = truncated_svd<double>(a, 5);
  const double det_err =
      (a - det.u * det.singular_values.asDiagonal() * det.v.transpose()).norm() / a.norm();

  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    RngStream rng(seed, 0);
    const auto rsvd = randomized_svd<double>(a, 5, 4, rng);
    errs.push_back(
        (a - rsvd.u * rsvd.singular_values.asDiagonal() * rsvd.v.transpose()).norm() / a.norm());
  }
  std::sort(errs.begin(), errs.end());
  CHECK(errs[12] <= 10.0 * det_err);
}

TEST_CASE("range finder residual medians do not grow with oversampling") {
  Vector<double> sv(20);
  for (Index i = 0; i < 20; ++i) sv(i) = std::pow(0.7, static_cast<double>(i));
  const Matrix<double> a = planted_spectrum_matrix(40, 80, sv, 402);

  auto median_residual = [&](Index p) {
    std::vector<double> r;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      RngStream rng(seed, 77);
      const auto basis = range_finder<double>(a, 6, p, rng);
      r.push_back((a - basis.q * (basis.q.transpose() * a)).norm());
    }
    std::sort(r.begin(), r.end());
    return r[12];
  };

  const double m0 = median_residual(0);
  const double m4 = median_residual(4);
  const double m8 = median_residual(8);
  CHECK(m4 <= m0 * 1.05);
  CHECK(m8 <= m4 * 1.05);
}

TEST_CASE("mean sketched-QR residual stays under the expected-error bound") {
  Vector<double> sv(30);
  for (Index i = 0; i < 30; ++i) sv(i) = std::pow(0.8, static_cast<double>(i));
  const Matrix<double> a = planted_spectrum_matrix(30, 90, sv, 403);

  const Index k = 8, p = 4;
  double tail2 = 0.0;
  for (Index i = k; i < sv.size(); ++i) tail2 += sv(i) * sv(i);
  const double bound = rangefinder_error_bound(k, p, std::sqrt(tail2));

  double sum = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    RngStream rng(static_cast<std::uint64_t>(t), 5);
    const Matrix<double> q = sketched_qr_basis<double>(a, k + p, rng);
    sum += (a - q * (q.transpose() * a)).norm();
  }
  CHECK(sum / trials <= bound * 1.01);
}

TEST_CASE("returned bases are orthonormal to machine precision") {
  const Matrix<double> a = testing::random_matrix(35, 70, 404);
  RngStream rng(25, 0);
  CHECK(orthonormality_defect<double>(range_finder<double>(a, 6, 4, rng).q) <= 1e-12);
  CHECK(orthonormality_defect<double>(sketched_qr_basis<double>(a, 10, rng)) <= 1e-12);
  CHECK(orthonormality_defect<double>(randomized_svd<double>(a, 6, 4, rng).u) <= 1e-12);
}
