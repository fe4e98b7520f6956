#pragma once

#include "metaradar/environment.hpp"
#include "metaradar/hermitian.hpp"
#include "metaradar/waveform.hpp"

namespace metaradar {

/// Neyman-Pearson detector for a CN(0, 1) target along y in Gaussian
/// disturbance with covariance Sigma_0 = clutter + noise. The statistic
/// |y^H Sigma_0^{-1} z|^2 is exponential under both hypotheses, which gives a
/// closed-form ROC.
class GaussianDetector {
 public:
  GaussianDetector(const Waveform& y, HermitianMatrix h0_cov);

  /// |w^H z|^2 with w = Sigma_0^{-1} y.
  [[nodiscard]] double score(const CVector& z) const;

  [[nodiscard]] const CVector& whitened_steering() const noexcept { return w_; }
  /// y^H Sigma_0^{-1} y: mean of the statistic under H0.
  [[nodiscard]] double quadratic_form() const noexcept { return quad_; }
  /// sigma_alpha^2 y^H Sigma_0^{-1} y.
  [[nodiscard]] double effective_snr() const noexcept { return q_eff_; }
  [[nodiscard]] const HermitianMatrix& h0_cov() const noexcept { return h0_cov_; }
  [[nodiscard]] const CVector& steering() const noexcept { return y_; }
  /// False when built for non-Gaussian (shape != 2) clutter.
  [[nodiscard]] bool matched() const noexcept { return matched_; }

 private:
  friend GaussianDetector build_ideal_detector(const Waveform& y, const EnvironmentSpec& env);

  CVector y_;
  HermitianMatrix h0_cov_;
  CVector w_;
  double quad_ = 0.0;
  double q_eff_ = 0.0;
  bool matched_ = true;
};

/// Uses the true clutter and noise covariances of `env`. Throws NumericError if
/// Sigma_0 is not positive definite.
GaussianDetector build_ideal_detector(const Waveform& y, const EnvironmentSpec& env);

double score(const GaussianDetector& det, const CVector& z);

/// Pd = Pfa^{1 / (1 + q_eff)} for 0 < pfa < 1.
double closed_form_roc(double pfa, double effective_snr);
inline double closed_form_roc(double pfa, const GaussianDetector& det) {
  return closed_form_roc(pfa, det.effective_snr());
}

}  // namespace metaradar
