#pragma once

#include <Eigen/Dense>
#include <complex>

namespace sparsebeam {

template <typename Scalar>
using ComplexVector = Eigen::Vector<std::complex<Scalar>, Eigen::Dynamic>;

template <typename Scalar>
using ComplexMatrix =
    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RealVector = Eigen::Vector<Scalar, Eigen::Dynamic>;

template <typename Scalar>
using RealMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

using ComplexVectorXd = ComplexVector<double>;
using ComplexMatrixXd = ComplexMatrix<double>;
using RealVectorXd = RealVector<double>;

}  // namespace sparsebeam
