#pragma once

#include <Eigen/Dense>
#include <memory>
#include <mutex>
#include <utility>

#include "sparsebeam/errors.hpp"
#include "sparsebeam/types.hpp"

namespace sparsebeam {

// Relative tolerance for accepting a matrix as conjugate-symmetric.
inline constexpr double kHermitianRelTol = 1e-12;

// An eigenvalue counts as positive only above this fraction of the largest.
inline constexpr double kPositiveDefiniteRelTol = 1e-12;

// Dense Hermitian matrix. Validates conjugate symmetry on construction,
// stores the symmetrized matrix, and lazily caches its (real, ascending)
// eigenvalues. Immutable after construction; copies share the cache.
template <typename Scalar>
class HermitianMatrix {
 public:
  using Complex = std::complex<Scalar>;
  using Matrix = ComplexMatrix<Scalar>;

  explicit HermitianMatrix(Matrix m, Scalar rel_tol = Scalar(kHermitianRelTol))
      : mat_(std::move(m)) {
    if (mat_.rows() != mat_.cols()) {
      throw ValidationError("HermitianMatrix: matrix must be square");
    }
    const Scalar scale = mat_.norm();
    const Scalar drift = (mat_ - mat_.adjoint()).norm();
    if (drift > rel_tol * scale) {
      throw ValidationError("HermitianMatrix: matrix is not conjugate-symmetric");
    }
    mat_ = ((mat_ + mat_.adjoint()) / Scalar(2)).eval();
  }

  static HermitianMatrix Identity(Index n) {
    return HermitianMatrix(Matrix::Identity(n, n));
  }

  Index rows() const { return mat_.rows(); }
  const Matrix& matrix() const { return mat_; }

  // Ascending eigenvalues, computed on first use and shared between copies.
  const RealVector<Scalar>& eigenvalues() const {
    std::call_once(cache_->once, [this] {
      Eigen::SelfAdjointEigenSolver<Matrix> es(mat_, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) {
        throw NumericalError("HermitianMatrix: eigenvalue iteration failed");
      }
      cache_->values = es.eigenvalues();
    });
    return cache_->values;
  }

  Scalar min_eigenvalue() const { return eigenvalues()(0); }
  Scalar max_eigenvalue() const { return eigenvalues()(rows() - 1); }

  bool is_positive_definite(
      Scalar rel_tol = Scalar(kPositiveDefiniteRelTol)) const {
    const Scalar top = max_eigenvalue();
    return top > Scalar(0) && min_eigenvalue() > rel_tol * top;
  }

 private:
  struct EigenCache {
    std::once_flag once;
    RealVector<Scalar> values;
  };

  Matrix mat_;
  std::shared_ptr<EigenCache> cache_ = std::make_shared<EigenCache>();
};

using HermitianMatrixXd = HermitianMatrix<double>;

// Ascending eigenvalues of a Hermitian matrix.
template <typename Scalar>
const RealVector<Scalar>& herm_eigvals(const HermitianMatrix<Scalar>& a) {
  return a.eigenvalues();
}

template <typename Scalar>
struct EigenDecomposition {
  RealVector<Scalar> values;        // ascending
  ComplexMatrix<Scalar> vectors;    // columns match values
};

template <typename Scalar>
EigenDecomposition<Scalar> herm_eig(const HermitianMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(a.matrix());
  if (es.info() != Eigen::Success) {
    throw NumericalError("herm_eig: eigenvalue iteration failed");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

// Solves A x = b for Hermitian positive definite A by Cholesky, with one
// step of iterative refinement to push the residual toward 1e-10 * |b|.
template <typename Scalar>
ComplexVector<Scalar> solve_hpd(const HermitianMatrix<Scalar>& a,
                                const ComplexVector<Scalar>& b) {
  if (a.rows() != b.size()) {
    throw ValidationError("solve_hpd: dimension mismatch");
  }
  if (!a.is_positive_definite()) {
    throw SingularMatrixError("solve_hpd: matrix is not positive definite");
  }
  Eigen::LLT<ComplexMatrix<Scalar>> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("solve_hpd: Cholesky factorization failed");
  }
  ComplexVector<Scalar> x = llt.solve(b);
  x += llt.solve(b - a.matrix() * x);
  return x;
}

}  // namespace sparsebeam
