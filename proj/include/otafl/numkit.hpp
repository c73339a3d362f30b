#pragma once

// Small dense complex linear-algebra kernel shared by every solver.
//
// All routines are templated on the real scalar type and accept Eigen
// expressions, so `hermitian_eig(H * H.adjoint())` works without a temporary
// at the call site.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "otafl/errors.hpp"

namespace otafl {

template <typename T>
using CVector = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, 1>;
template <typename T>
using CMatrix = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using CVectorXd = CVector<double>;
using CMatrixXd = CMatrix<double>;

namespace tol {
// Reconstruction bound for eigendecompositions, relative to ||A||_F.
inline constexpr double kReconstruction = 1e-10;
// Entry-wise Hermitian check, relative to max(1, max|a_ij|).
inline constexpr double kHermitian = 1e-12;
// Smallest eigenvalue still counted as nonzero when classifying rank.
inline constexpr double kRank = 1e-12;
}  // namespace tol

template <typename T>
struct EigDecomposition {
  RVector<T> eigenvalues;   // ascending
  CMatrix<T> eigenvectors;  // columns, unitary
};

namespace detail {

template <typename Derived>
using RealOf = typename Eigen::NumTraits<typename Derived::Scalar>::Real;

// Largest-magnitude entry of each column is rotated onto the positive real
// axis; ties go to the lowest row index.
template <typename T>
void fix_phases(CMatrix<T>& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index best = 0;
    T best_mag = T(-1);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const T mag = std::abs(v(i, j));
      if (mag > best_mag * (T(1) + T(64) * Eigen::NumTraits<T>::epsilon())) {
        best = i;
        best_mag = mag;
      }
    }
    if (best_mag > T(0)) {
      const std::complex<T> phase = std::conj(v(best, j)) / best_mag;
      v.col(j) *= phase;
      v(best, j) = std::complex<T>(std::abs(v(best, j)), T(0));
    }
  }
}

}  // namespace detail

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& a,
                  detail::RealOf<Derived> tolerance = tol::kHermitian) {
  using T = detail::RealOf<Derived>;
  if (a.rows() != a.cols()) return false;
  const T scale = std::max(T(1), a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - std::conj(a(j, i))) > tolerance * scale) return false;
    }
  }
  return true;
}

template <typename Derived>
void require_hermitian(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) {
    throw ContractViolation("expected a square matrix, got " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()));
  }
  if (a.rows() == 0) throw ContractViolation("expected a non-empty matrix");
  if (!is_hermitian(a)) throw ContractViolation("matrix is not Hermitian");
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues and
/// deterministic eigenvector phases.
template <typename Derived>
EigDecomposition<detail::RealOf<Derived>> hermitian_eig(const Eigen::MatrixBase<Derived>& a) {
  using T = detail::RealOf<Derived>;
  require_hermitian(a);
  const CMatrix<T> herm = (a.template cast<std::complex<T>>() +
                           a.template cast<std::complex<T>>().adjoint()) /
                          T(2);
  Eigen::SelfAdjointEigenSolver<CMatrix<T>> solver(herm);
  if (solver.info() != Eigen::Success) {
    throw ContractViolation("Hermitian eigensolver did not converge");
  }
  EigDecomposition<T> out{solver.eigenvalues(), solver.eigenvectors()};
  detail::fix_phases(out.eigenvectors);
  return out;
}

/// Frobenius-nearest positive semidefinite matrix: V max(L, 0) V^H.
template <typename Derived>
CMatrix<detail::RealOf<Derived>> psd_project(const Eigen::MatrixBase<Derived>& s) {
  using T = detail::RealOf<Derived>;
  const auto eig = hermitian_eig(s);
  const RVector<T> clipped = eig.eigenvalues.cwiseMax(T(0));
  CMatrix<T> out = eig.eigenvectors * clipped.template cast<std::complex<T>>().asDiagonal() *
                   eig.eigenvectors.adjoint();
  return (out + out.adjoint()) / T(2);
}

/// (m^H A m) / (m^H m).
template <typename DerivedV, typename DerivedM>
detail::RealOf<DerivedM> rayleigh_quotient(const Eigen::MatrixBase<DerivedV>& m,
                                           const Eigen::MatrixBase<DerivedM>& a) {
  using T = detail::RealOf<DerivedM>;
  require(a.rows() == a.cols() && a.rows() == m.size(),
          "rayleigh_quotient: dimension mismatch");
  const T norm2 = m.squaredNorm();
  if (!(norm2 > T(0))) throw ContractViolation("rayleigh_quotient: zero vector");
  return std::real(m.dot(a * m)) / norm2;
}

/// Unit eigenvector for the largest eigenvalue.
template <typename Derived>
CVector<detail::RealOf<Derived>> principal_eigenvector(const Eigen::MatrixBase<Derived>& a) {
  const auto eig = hermitian_eig(a);
  return eig.eigenvectors.col(eig.eigenvectors.cols() - 1);
}

/// Frobenius inner product <A, B> = Re tr(A^H B).
template <typename DerivedA, typename DerivedB>
detail::RealOf<DerivedA> frobenius_inner(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  return std::real(a.cwiseProduct(b.conjugate()).sum());
}

}  // namespace otafl
