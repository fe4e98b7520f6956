#include "metaradar/ideal_detector.hpp"

#include "metaradar/clutter.hpp"
#include "metaradar/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace metaradar {

GaussianDetector::GaussianDetector(const Waveform& y, HermitianMatrix h0_cov)
    : y_(y.chips()), h0_cov_(std::move(h0_cov)) {
  if (h0_cov_.dim() != y_.size()) throw std::invalid_argument("GaussianDetector: covariance/waveform size mismatch");
  Eigen::LLT<CMatrix> llt(h0_cov_.matrix());
  if (llt.info() != Eigen::Success) {
    throw NumericError("GaussianDetector: H0 covariance is not positive definite");
  }
  w_ = llt.solve(y_);
  quad_ = y_.dot(w_).real();  // dot() conjugates the first argument
  if (!(quad_ > 0.0) || !std::isfinite(quad_)) {
    throw NumericError("GaussianDetector: non-positive quadratic form y^H Sigma^-1 y");
  }
  q_eff_ = kTargetPower * quad_;
}

double GaussianDetector::score(const CVector& z) const {
  if (z.size() != w_.size()) throw std::invalid_argument("GaussianDetector::score: dimension mismatch");
  return std::norm(w_.dot(z));
}

GaussianDetector build_ideal_detector(const Waveform& y, const EnvironmentSpec& env) {
  env.validate();
  HermitianMatrix sigma0 = clutter_cov(y, env.shape, env.median) + noise_cov(env, y.size());
  GaussianDetector det(y, std::move(sigma0));
  det.matched_ = env.shape == 2.0;
  return det;
}

double score(const GaussianDetector& det, const CVector& z) { return det.score(z); }

double closed_form_roc(double pfa, double effective_snr) {
  if (!(pfa > 0.0 && pfa < 1.0)) throw std::invalid_argument("closed_form_roc: pfa must lie in (0, 1)");
  if (!(effective_snr >= 0.0)) throw std::invalid_argument("closed_form_roc: effective SNR must be >= 0");
  return std::pow(pfa, 1.0 / (1.0 + effective_snr));
}

}  // namespace metaradar
