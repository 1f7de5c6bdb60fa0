#include "hardylab/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace hardylab {

bool is_hermitian(const ComplexMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

ComplexMatrix matrix_exp(const ComplexMatrix& m, std::complex<double> s) {
  const Eigen::Index n = m.rows();
  if (n == 1) return ComplexMatrix::Constant(1, 1, std::exp(s * m(0, 0)));
  if (is_hermitian(m)) {
    const ComplexMatrix h = hermitian_part(m);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    const auto& q = es.eigenvectors();
    Eigen::VectorXcd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = std::exp(s * es.eigenvalues()(i));
    return q * d.asDiagonal() * q.adjoint();
  }
  const ComplexMatrix scaled = s * m;
  return scaled.exp();
}

double operator_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace hardylab
