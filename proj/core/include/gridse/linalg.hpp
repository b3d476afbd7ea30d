#pragma once

#include <complex>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace gridse {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<std::complex<double>>;
using Triplet = Eigen::Triplet<double>;

}  // namespace gridse
