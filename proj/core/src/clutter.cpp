#include "metaradar/clutter.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace metaradar {

namespace {

void check_clutter_params(double shape, double median) {
  if (!(shape > 0.0)) throw std::invalid_argument("clutter: Weibull shape must be positive");
  if (!(median >= 0.0)) throw std::invalid_argument("clutter: median must be non-negative");
}

}  // namespace

double weibull_scale_from_median(double shape, double median) {
  check_clutter_params(shape, median);
  return median / std::pow(std::numbers::ln2, 1.0 / shape);
}

double clutter_coeff_power(double shape, double median) {
  const double b = weibull_scale_from_median(shape, median);
  return b * b * std::tgamma(1.0 + 2.0 / shape);
}

cdouble sample_clutter_coeff(double shape, double median, Rng& rng) {
  const double b = weibull_scale_from_median(shape, median);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  if (b == 0.0) return {0.0, 0.0};
  // u in [0,1) so -log1p(-u) is finite and >= 0.
  const double amplitude = b * std::pow(-std::log1p(-u), 1.0 / shape);
  return std::polar(amplitude, phase);
}

CVector generate_clutter(const Waveform& y, double shape, double median, Rng& rng) {
  const int k = y.size();
  CVector c = CVector::Zero(k);
  for (int g = -k + 1; g <= k - 1; ++g) {
    const cdouble gamma = sample_clutter_coeff(shape, median, rng);
    // (J_g y)[v] = y[v - g]
    const int v_begin = std::max(0, g);
    const int v_end = std::min(k, k + g);
    for (int v = v_begin; v < v_end; ++v) c(v) += gamma * y[v - g];
  }
  return c;
}

HermitianMatrix clutter_cov(const Waveform& y, double shape, double median) {
  const int k = y.size();
  const double power = clutter_coeff_power(shape, median);
  CMatrix sum = CMatrix::Zero(k, k);
  for (int g = -k + 1; g <= k - 1; ++g) {
    const CVector s = shifted(y, g);
    sum.noalias() += s * s.adjoint();
  }
  return HermitianMatrix(power * sum);
}

}  // namespace metaradar
