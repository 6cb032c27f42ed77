#include "mqcont/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

namespace mqcont::linalg {

Vector LuFactorization::solve(const Vector& rhs) const { return lu.solve(rhs); }
Matrix LuFactorization::solve(const Matrix& rhs) const { return lu.solve(rhs); }

LuFactorization lu_factor(const Matrix& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("lu_factor: matrix must be square");

  LuFactorization f;
  f.lu.compute(a);

  // Permutation parity times the signs of the U diagonal gives sign(det A).
  int sign = f.lu.permutationP().determinant() > 0 ? 1 : -1;
  double log_abs = 0.0;
  const auto diag = f.lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double d = diag[i];
    if (d == 0.0) {
      f.singular = true;
      sign = 0;
      continue;
    }
    if (d < 0.0) sign = -sign;
    log_abs += std::log(std::abs(d));
  }
  f.det_sign = f.singular ? 0 : sign;
  f.log_abs_det = f.singular ? -std::numeric_limits<double>::infinity() : log_abs;
  return f;
}

Spectrum eigen_full(const Matrix& a, bool with_vectors) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("eigen_full: matrix must be square");

  Eigen::EigenSolver<Matrix> solver(a, with_vectors);

  Spectrum out;
  const ComplexVector raw = solver.eigenvalues();
  if (solver.info() != Eigen::Success) {
    out.eigenvalues = raw;
    throw EigenFailure("eigen_full: QR iteration did not converge", std::move(out));
  }

  std::vector<Eigen::Index> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    if (raw[i].real() != raw[j].real()) return raw[i].real() > raw[j].real();
    return raw[i].imag() > raw[j].imag();
  });

  out.eigenvalues.resize(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) out.eigenvalues[i] = raw[order[i]];

  if (with_vectors) {
    const ComplexMatrix vecs = solver.eigenvectors();
    ComplexMatrix sorted(vecs.rows(), vecs.cols());
    for (Eigen::Index i = 0; i < raw.size(); ++i) sorted.col(i) = vecs.col(order[i]);
    out.eigenvectors = sorted;

    out.residual_norms.resize(raw.size());
    const ComplexMatrix ac = a.cast<std::complex<double>>();
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
      const auto v = sorted.col(i);
      out.residual_norms[i] = (ac * v - out.eigenvalues[i] * v).norm() / v.norm();
    }
  }
  return out;
}

ConditionEstimate cond_svd(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  ConditionEstimate est;
  est.sigma_max = sv.size() ? sv[0] : 0.0;
  est.sigma_min = sv.size() ? sv[sv.size() - 1] : 0.0;
  est.ratio = est.sigma_min > 0.0 ? est.sigma_max / est.sigma_min
                                  : std::numeric_limits<double>::infinity();
  return est;
}

} // namespace mqcont::linalg
