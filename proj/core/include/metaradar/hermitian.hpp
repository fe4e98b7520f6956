#pragma once

#include <Eigen/Dense>

#include <complex>

namespace metaradar {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Square complex matrix that is Hermitian by construction.
///
/// The constructor checks conjugate symmetry (relative tolerance 1e-12 of the
/// largest entry) and then stores the exactly symmetrized matrix.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const CMatrix& m);

  static HermitianMatrix zero(Eigen::Index dim);
  static HermitianMatrix identity(Eigen::Index dim);

  [[nodiscard]] const CMatrix& matrix() const noexcept { return m_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return m_.rows(); }
  [[nodiscard]] cdouble operator()(Eigen::Index v, Eigen::Index h) const { return m_(v, h); }

  /// Real eigenvalues in ascending order.
  [[nodiscard]] Eigen::VectorXd eigenvalues() const;
  /// Smallest eigenvalue >= -tol * largest |eigenvalue|.
  [[nodiscard]] bool is_psd(double tol = 1e-10) const;
  [[nodiscard]] double trace() const { return m_.trace().real(); }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b);
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a);

 private:
  struct Unchecked {};
  HermitianMatrix(CMatrix m, Unchecked) : m_(std::move(m)) {}

  CMatrix m_;
};

}  // namespace metaradar
