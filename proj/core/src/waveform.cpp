#include "metaradar/waveform.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace metaradar {

Waveform::Waveform(CVector chips) : chips_(std::move(chips)) {
  if (chips_.size() < 1) {
    throw std::invalid_argument("Waveform: at least one chip is required");
  }
  const double norm = chips_.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("Waveform: chips must have finite, non-zero energy");
  }
  chips_ /= norm;
}

Waveform lfm_waveform(int chips, double chirp_rate, double sample_rate) {
  if (chips < 1) throw std::invalid_argument("lfm_waveform: chip count must be positive");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("lfm_waveform: sample rate must be positive");

  CVector y(chips);
  const double amp = 1.0 / std::sqrt(static_cast<double>(chips));
  for (int k = 0; k < chips; ++k) {
    const double t = static_cast<double>(k) / sample_rate;
    y(k) = amp * std::polar(1.0, std::numbers::pi * chirp_rate * t * t);
  }
  return Waveform(std::move(y));
}

CVector shifted(const Waveform& y, int shift) {
  const int k = y.size();
  CVector out = CVector::Zero(k);
  for (int v = 0; v < k; ++v) {
    const int src = v - shift;
    if (src >= 0 && src < k) out(v) = y[src];
  }
  return out;
}

}  // namespace metaradar
