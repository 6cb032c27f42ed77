#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>

namespace mqcont {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

namespace linalg {

/// LU factorization with partial pivoting plus the determinant bookkeeping the
/// continuation test functions need: the sign of det(A) (0 for an exactly
/// singular factor) and log|det(A)|, which stays finite where det itself would
/// over- or underflow.
struct LuFactorization {
  Eigen::PartialPivLU<Matrix> lu;
  int det_sign = 0;
  double log_abs_det = 0.0;
  bool singular = false;

  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;
};

LuFactorization lu_factor(const Matrix& a);

/// Eigenvalues sorted by descending real part (ties broken by descending
/// imaginary part), so complex-conjugate pairs sit adjacent.  When vectors are
/// requested each column is certified by its residual |Av - lambda v|.
struct Spectrum {
  ComplexVector eigenvalues;
  std::optional<ComplexMatrix> eigenvectors;
  Vector residual_norms;
};

struct EigenFailure : std::runtime_error {
  Spectrum partial;
  explicit EigenFailure(const char* what, Spectrum got)
      : std::runtime_error(what), partial(std::move(got)) {}
};

Spectrum eigen_full(const Matrix& a, bool with_vectors = false);

/// sigma_max / sigma_min from a full SVD; ratio is +inf when sigma_min == 0.
struct ConditionEstimate {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double ratio = 0.0;
};

ConditionEstimate cond_svd(const Matrix& a);

} // namespace linalg
} // namespace mqcont
