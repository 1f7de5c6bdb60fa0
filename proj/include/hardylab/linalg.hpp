#pragma once

#include <Eigen/Dense>
#include <complex>

namespace hardylab {

using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// exp(s * M). Hermitian M goes through an eigendecomposition, everything else through Pade
// scaling and squaring.
ComplexMatrix matrix_exp(const ComplexMatrix& m, std::complex<double> s);

bool is_hermitian(const ComplexMatrix& m, double rel_tol = 1e-14);

// Largest singular value.
double operator_norm(const ComplexMatrix& m);

ComplexMatrix hermitian_part(const ComplexMatrix& m);

}  // namespace hardylab
