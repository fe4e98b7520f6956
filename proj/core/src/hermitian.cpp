#include "metaradar/hermitian.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace metaradar {

HermitianMatrix::HermitianMatrix(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("HermitianMatrix: matrix must be square");
  }
  const CMatrix diff = m - m.adjoint();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (m.size() > 0 && diff.cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("HermitianMatrix: matrix is not conjugate symmetric");
  }
  m_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::zero(Eigen::Index dim) {
  return {CMatrix::Zero(dim, dim), Unchecked{}};
}

HermitianMatrix HermitianMatrix::identity(Eigen::Index dim) {
  return {CMatrix::Identity(dim, dim), Unchecked{}};
}

Eigen::VectorXd HermitianMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

bool HermitianMatrix::is_psd(double tol) const {
  if (dim() == 0) return true;
  const Eigen::VectorXd ev = eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -tol * largest;
}

HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("HermitianMatrix: dimension mismatch in sum");
  }
  return {a.m_ + b.m_, HermitianMatrix::Unchecked{}};
}

HermitianMatrix operator*(double s, const HermitianMatrix& a) {
  return {s * a.m_, HermitianMatrix::Unchecked{}};
}

}  // namespace metaradar
