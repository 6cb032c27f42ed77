#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mqcont/linalg.hpp"

using namespace mqcont;
using namespace mqcont::linalg;

namespace {

// --- independent eigenvalue oracle: Sturm-sequence bisection ----------------
// Counts eigenvalues of the symmetric tridiagonal matrix (diag d, offdiag e)
// strictly below x, then brackets the k-th one by bisection.  Shares no code
// with the library path (Hessenberg + QR iteration).

int sturm_count_below(const std::vector<double>& d, const std::vector<double>& e, double x) {
  int count = 0;
  double q = 1.0;
  for (size_t i = 0; i < d.size(); ++i) {
    const double e2 = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
    if (q == 0.0) q = 1e-300;
    q = d[i] - x - e2 / q;
    if (q < 0.0) ++count;
  }
  return count;
}

std::vector<double> sturm_eigenvalues(const std::vector<double>& d,
                                      const std::vector<double>& e) {
  const int n = static_cast<int>(d.size());
  double lo = d[0], hi = d[0];
  for (int i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) +
                     (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  std::vector<double> ev(n);
  for (int k = 0; k < n; ++k) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
      const double mid = 0.5 * (a + b);
      if (sturm_count_below(d, e, mid) <= k)
        a = mid;
      else
        b = mid;
    }
    ev[k] = 0.5 * (a + b);
  }
  return ev; // ascending
}

Matrix tridiag(const std::vector<double>& d, const std::vector<double>& e) {
  const int n = static_cast<int>(d.size());
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = d[i];
    if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = e[i];
  }
  return a;
}

} // namespace

TEST_CASE("LU: determinant sign and log magnitude on known matrices") {
  Matrix a(2, 2);
  a << 3, 1, 4, 2; // det = 2
  auto f = lu_factor(a);
  CHECK_FALSE(f.singular);
  CHECK(f.det_sign == 1);
  CHECK(f.log_abs_det == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  a << 1, 2, 3, 4; // det = -2
  f = lu_factor(a);
  CHECK(f.det_sign == -1);
  CHECK(f.log_abs_det == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // a permutation matrix with sign -1
  Matrix p = Matrix::Zero(3, 3);
  p(0, 1) = p(1, 0) = p(2, 2) = 1.0;
  f = lu_factor(p);
  CHECK(f.det_sign == -1);
  CHECK(f.log_abs_det == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("LU: log|det| stays finite where det overflows") {
  const int n = 400;
  const Matrix a = 10.0 * Matrix::Identity(n, n); // det = 10^400
  const auto f = lu_factor(a);
  CHECK(f.det_sign == 1);
  CHECK(std::isfinite(f.log_abs_det));
  CHECK(f.log_abs_det == doctest::Approx(n * std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("LU: exactly singular matrix is flagged") {
  Matrix a(2, 2);
  a << 1, 2, 2, 4;
  const auto f = lu_factor(a);
  CHECK(f.singular);
  CHECK(f.det_sign == 0);
  CHECK(std::isinf(f.log_abs_det));
  CHECK(f.log_abs_det < 0.0);
}

TEST_CASE("LU: solve reaches residual ~ machine precision") {
  std::mt19937 gen(2024);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const int n = 40;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = d(gen);
  a += n * Matrix::Identity(n, n); // diagonally dominant, well conditioned
  Vector b(n);
  for (int i = 0; i < n; ++i) b[i] = d(gen);

  const auto f = lu_factor(a);
  const Vector x = f.solve(b);
  CHECK((a * x - b).norm() <= 1e-11 * b.norm());

  Matrix rhs(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) rhs(i, j) = d(gen);
  const Matrix xm = f.solve(rhs);
  CHECK((a * xm - rhs).norm() <= 1e-11 * rhs.norm());
}

TEST_CASE("LU: rectangular input is rejected") {
  CHECK_THROWS_AS(lu_factor(Matrix::Zero(3, 4)), std::invalid_argument);
}

TEST_CASE("eigenvalues of symmetric tridiagonal matrices match Sturm bisection") {
  std::mt19937 gen(99);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int n : {5, 12, 30}) {
    CAPTURE(n);
    std::vector<double> d(n), e(n - 1);
    for (double& v : d) v = dist(gen);
    for (double& v : e) v = dist(gen);
    const Matrix a = tridiag(d, e);
    const double scale = a.cwiseAbs().maxCoeff();

    const Spectrum sp = eigen_full(a);
    REQUIRE(sp.eigenvalues.size() == n);
    for (int i = 0; i < n; ++i) CHECK(std::abs(sp.eigenvalues[i].imag()) <= 1e-10 * scale);

    std::vector<double> got(n);
    for (int i = 0; i < n; ++i) got[i] = sp.eigenvalues[i].real();
    std::sort(got.begin(), got.end());
    const std::vector<double> want = sturm_eigenvalues(d, e);
    for (int i = 0; i < n; ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10).scale(scale));
  }
}

TEST_CASE("eigenvalue ordering: descending real part, conjugates adjacent") {
  Matrix a(4, 4);
  // block diag( rotation by 90deg scaled, [2], [-1] ): eigenvalues 2, +-i, -1
  a.setZero();
  a(0, 1) = -1.0;
  a(1, 0) = 1.0;
  a(2, 2) = 2.0;
  a(3, 3) = -1.0;
  const Spectrum sp = eigen_full(a);
  REQUIRE(sp.eigenvalues.size() == 4);
  CHECK(sp.eigenvalues[0].real() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sp.eigenvalues[1].real() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(sp.eigenvalues[1].imag() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.eigenvalues[2].imag() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sp.eigenvalues[3].real() == doctest::Approx(-1.0).epsilon(1e-12));
  for (int i = 0; i + 1 < 4; ++i)
    CHECK(sp.eigenvalues[i].real() >= sp.eigenvalues[i + 1].real() - 1e-12);
}

TEST_CASE("eigenvectors come with small certified residuals") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int n = 15;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = dist(gen);
  const Spectrum sp = eigen_full(a, true);
  REQUIRE(sp.eigenvectors.has_value());
  REQUIRE(sp.residual_norms.size() == n);
  const double scale = a.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i) {
    CHECK(sp.residual_norms[i] <= 1e-10 * scale);
    // the reported residuals are honest: recompute
    const ComplexVector v = sp.eigenvectors->col(i);
    const double r = (a.cast<std::complex<double>>() * v - sp.eigenvalues[i] * v).norm() /
                     v.norm();
    CHECK(sp.residual_norms[i] == doctest::Approx(r).epsilon(1e-8).scale(1e-12));
  }
}

TEST_CASE("condition estimate from SVD") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 1.0;
  a(2, 2) = 1e-3;
  const auto c = cond_svd(a);
  CHECK(c.sigma_max == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(c.sigma_min == doctest::Approx(1e-3).epsilon(1e-13));
  CHECK(c.ratio == doctest::Approx(3000.0).epsilon(1e-12));

  a(2, 2) = 0.0;
  const auto s = cond_svd(a);
  CHECK(s.sigma_min == 0.0);
  CHECK(std::isinf(s.ratio));
}
