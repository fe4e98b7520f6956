#pragma once

#include "metaradar/hermitian.hpp"
#include "metaradar/random.hpp"
#include "metaradar/waveform.hpp"

namespace metaradar {

/// Weibull scale b such that the amplitude median b (ln 2)^{1/shape} equals `median`.
double weibull_scale_from_median(double shape, double median);

/// E|gamma|^2 = b^2 Gamma(1 + 2/shape).
double clutter_coeff_power(double shape, double median);

/// Coherent Weibull coefficient: Weibull amplitude (inverse-CDF draw) with an
/// independent phase uniform on [0, 2pi).
cdouble sample_clutter_coeff(double shape, double median, Rng& rng);

/// c = sum_{g=-K+1}^{K-1} gamma_g J_g y with i.i.d. coherent Weibull gamma_g.
CVector generate_clutter(const Waveform& y, double shape, double median, Rng& rng);

/// Analytic second moment of generate_clutter: E|gamma|^2 sum_g (J_g y)(J_g y)^H.
HermitianMatrix clutter_cov(const Waveform& y, double shape, double median);

}  // namespace metaradar
